#include <gtest/gtest.h>

#include <cmath>

#include "muxai/error.hpp"
#include "muxai/xai_metrics.hpp"

using namespace muxai;

namespace {

Heatmap heat(int h, int w, std::vector<float> v) {
    Heatmap out{Image(h, w), "test", false};
    std::copy(v.begin(), v.end(), out.values.storage().begin());
    return out;
}

RoiMask mask(int h, int w, std::vector<std::uint8_t> v) {
    RoiMask m(h, w);
    std::copy(v.begin(), v.end(), m.storage().begin());
    return m;
}

}  // namespace

TEST(XaiMetrics, CoverageHandExamples) {
    const std::vector<Heatmap> hs{heat(2, 2, {0.5f, 0.5f, 0.0f, 0.0f})};
    EXPECT_DOUBLE_EQ(heatmap_coverage(hs, std::vector{mask(2, 2, {1, 0, 0, 0})}).value, 0.5);
    EXPECT_DOUBLE_EQ(heatmap_coverage(hs, std::vector{mask(2, 2, {1, 1, 1, 1})}).value, 1.0);
    EXPECT_DOUBLE_EQ(heatmap_coverage(hs, std::vector{mask(2, 2, {0, 0, 1, 1})}).value, 0.0);

    const std::vector<Heatmap> two{heat(2, 2, {1.0f, 0.0f, 0.0f, 1.0f}), heat(2, 2, {0.2f, 0.2f, 0.6f, 0.0f})};
    const std::vector<RoiMask> ms{mask(2, 2, {1, 0, 0, 0}), mask(2, 2, {0, 0, 1, 0})};
    const auto r = heatmap_coverage(two, ms);
    EXPECT_NEAR(r.value, (0.5 + 0.6) / 2.0, 1e-7);
    EXPECT_EQ(r.n_samples, 2u);
    EXPECT_EQ(r.n_skipped, 0u);
}

TEST(XaiMetrics, ZeroMassPolicies) {
    const std::vector<Heatmap> hs{heat(1, 2, {0.0f, 0.0f}), heat(1, 2, {1.0f, 0.0f})};
    const std::vector<RoiMask> ms{mask(1, 2, {1, 0}), mask(1, 2, {1, 0})};
    const auto skip = heatmap_coverage(hs, ms, ZeroMassPolicy::skip);
    EXPECT_DOUBLE_EQ(skip.value, 1.0);
    EXPECT_EQ(skip.n_samples, 1u);
    EXPECT_EQ(skip.n_skipped, 1u);
    const auto zero = heatmap_coverage(hs, ms, ZeroMassPolicy::zero);
    EXPECT_DOUBLE_EQ(zero.value, 0.5);
    EXPECT_EQ(zero.n_samples, 2u);

    const std::vector<Heatmap> none{heat(1, 2, {0.0f, 0.0f})};
    try {
        heatmap_coverage(none, std::vector{mask(1, 2, {1, 1})});
        FAIL() << "expected UndefinedMetricError";
    } catch (const UndefinedMetricError& e) {
        EXPECT_EQ(e.skipped(), 1u);
    }
    EXPECT_THROW(heatmap_coverage(none, std::vector<RoiMask>{}), InputError);
    EXPECT_THROW(heatmap_coverage(none, std::vector{mask(2, 1, {1, 1})}), InputError);
}

TEST(XaiMetrics, CoverageIsAdditiveOverDisjointMasks) {
    Rng rng(4);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int trial = 0; trial < 50; ++trial) {
        Heatmap h{Image(6, 5), "t", false};
        for (auto& v : h.values.storage()) v = u(rng);
        RoiMask a(6, 5), b(6, 5), ab(6, 5);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const float r = u(rng);
            a.storage()[i] = r < 0.3f;
            b.storage()[i] = r > 0.7f;
            ab.storage()[i] = a.storage()[i] || b.storage()[i];
        }
        const std::vector<Heatmap> hs{h};
        const double ca = heatmap_coverage(hs, std::vector{a}).value;
        const double cb = heatmap_coverage(hs, std::vector{b}).value;
        const double cab = heatmap_coverage(hs, std::vector{ab}).value;
        EXPECT_NEAR(cab, ca + cb, 1e-9);
        EXPECT_GE(ca, 0.0);
        EXPECT_LE(cab, 1.0 + 1e-12);
    }
}

TEST(XaiMetrics, ClassCoverageSkipsImagesWithoutTheClass) {
    SceneSample with{Image(4, 4), {{ObjectClass::human, 0, 0, 2, 2}}, {}, 1};
    SceneSample without{Image(4, 4), {{ObjectClass::vehicle, 2, 2, 4, 4}}, {}, 1};
    std::vector<float> v(16, 0.0f);
    v[0] = 1.0f;
    v[15] = 1.0f;
    const std::vector<Heatmap> hs{heat(4, 4, v), heat(4, 4, v)};
    const std::vector<SceneSample> ss{with, without};
    const auto h = class_coverage(hs, ss, ClassSet{ObjectClass::human});
    EXPECT_DOUBLE_EQ(h.value, 0.5);
    EXPECT_EQ(h.n_samples, 1u);
    EXPECT_EQ(h.n_skipped, 1u);
    const auto r = class_coverage(hs, ss, ClassSet::retained(ObjectClass::human));
    EXPECT_DOUBLE_EQ(r.value, 0.5);
    EXPECT_EQ(r.n_skipped, 1u);
    EXPECT_THROW(class_coverage(hs, ss, ClassSet{ObjectClass::motorcycle}), UndefinedMetricError);
}

TEST(XaiMetrics, PopulationStdHandValues) {
    const std::vector<float> a{1, 0, 1, 0}, z{0, 0, 0, 0};
    EXPECT_DOUBLE_EQ(population_std(a, z), 0.5);
    EXPECT_DOUBLE_EQ(population_std(a, a), 0.0);
    const std::vector<float> shifted{1.25f, 0.25f, 1.25f, 0.25f};
    EXPECT_DOUBLE_EQ(population_std(shifted, z), 0.5);
    EXPECT_THROW(population_std(a, std::vector<float>{1.0f}), InputError);
    EXPECT_THROW(population_std(std::vector<float>{}, std::vector<float>{}), EmptyInputError);
}

TEST(XaiMetrics, AttentionShiftAveragesPerSampleStd) {
    const std::vector<Heatmap> o{heat(2, 2, {0, 0, 0, 0}), heat(2, 2, {0.5f, 0.5f, 0.5f, 0.5f})};
    const std::vector<Heatmap> u{heat(2, 2, {1, 0, 1, 0}), heat(2, 2, {0.7f, 0.7f, 0.7f, 0.7f})};
    const auto r = attention_shift(u, o);
    EXPECT_DOUBLE_EQ(r.value, 0.25);
    EXPECT_EQ(r.n_samples, 2u);
    EXPECT_DOUBLE_EQ(attention_shift(o, o).value, 0.0);
    // Symmetric in its arguments.
    EXPECT_DOUBLE_EQ(attention_shift(o, u).value, r.value);
    EXPECT_EQ(to_json(r).at("std_convention"), "population");
    EXPECT_THROW(attention_shift(std::vector<Heatmap>{}, std::vector<Heatmap>{}), EmptyInputError);
}
