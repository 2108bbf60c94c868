#include <gtest/gtest.h>

#include <cmath>

#include "muxai/error.hpp"
#include "muxai/sidu.hpp"

using namespace muxai;

namespace {

// One 1x1 conv block with three channels on a 4x4 input, then a single
// hidden unit whose positive bias keeps it active.
struct HandModel {
    ArchConfig arch;
    std::vector<float> conv_w{1.0f, 2.0f, -1.0f};
    std::vector<float> conv_b{0.0f, -0.5f, 0.0f};
    std::vector<float> fc_w{0.5f, 1.5f, 2.0f};
    float fc_b = 1.0f;

    HandModel() {
        arch.input_height = 4;
        arch.input_width = 4;
        arch.conv_blocks = {{3, 1, 0}};
        arch.hidden_width = 1;
    }

    ModelSnapshot snapshot() const {
        auto ts = tensor_layout(arch);
        for (auto& t : ts) {
            if (t.name == "conv0.weight") t.values = conv_w;
            else if (t.name == "conv0.bias") t.values = conv_b;
            else if (t.name == "fc.weight") t.values = fc_w;
            else if (t.name == "fc.bias") t.values = {fc_b};
            else if (t.name == "out.weight") t.values = {1.0f};
            else if (t.name == "out.bias") t.values = {0.0f};
        }
        return ModelSnapshot(arch, ts, Provenance::original, 0);
    }

    // Direct evaluation: channel c of the 2x2 pooled map.
    double feature(const Image& img, int c, int py, int px) const {
        double m = 0.0;
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
                m = std::max(m, std::max(0.0, double(conv_w[c]) * img(2 * py + dy, 2 * px + dx) + conv_b[c]));
        return m;
    }

    double predict(const Image& img) const {
        double h = fc_b;
        for (int c = 0; c < 3; ++c) {
            double gap = 0.0;
            for (int y = 0; y < 2; ++y)
                for (int x = 0; x < 2; ++x) gap += feature(img, c, y, x);
            h += fc_w[c] * gap / 4.0;
        }
        return std::max(0.0, h);
    }
};

Image image4() {
    Image img(4, 4);
    // Multiples of 1/8 keep every float product in the model exact.
    const int v[16] = {7, 1, 2, 0, 3, 4, 0, 1, 0, 0, 6, 5, 2, 1, 5, 4};
    for (int i = 0; i < 16; ++i) img.storage()[i] = v[i] / 8.0f;
    return img;
}

double bilinear_oracle(const Image& s, int H, int W, int y, int x) {
    const double fy = std::clamp((y + 0.5) * s.height() / H - 0.5, 0.0, s.height() - 1.0);
    const double fx = std::clamp((x + 0.5) * s.width() / W - 0.5, 0.0, s.width() - 1.0);
    const int y0 = int(fy), x0 = int(fx);
    const int y1 = std::min(y0 + 1, s.height() - 1), x1 = std::min(x0 + 1, s.width() - 1);
    const double ty = fy - y0, tx = fx - x0;
    return (1 - ty) * ((1 - tx) * s(y0, x0) + tx * s(y0, x1)) + ty * ((1 - tx) * s(y1, x0) + tx * s(y1, x1));
}

}  // namespace

TEST(Sidu, SimilarityAndUniquenessHandValues) {
    const std::vector<double> p{2.0, 1.0, 3.0};
    const auto sd = similarity_difference(2.0, p, 0.25);
    ASSERT_EQ(sd.size(), 3u);
    EXPECT_DOUBLE_EQ(sd[0], 1.0);
    EXPECT_NEAR(sd[1], std::exp(-8.0), 1e-15);
    EXPECT_NEAR(sd[2], std::exp(-8.0), 1e-15);
    const auto u = uniqueness(p);
    EXPECT_EQ(u, (std::vector<double>{2.0, 3.0, 3.0}));
    const std::vector<double> same{1.5, 1.5, 1.5};
    for (double x : uniqueness(same)) EXPECT_EQ(x, 0.0);
    EXPECT_THROW(similarity_difference(0.0, p, 0.0), ConfigError);
    EXPECT_THROW(uniqueness(std::vector<double>{}), EmptyInputError);
}

TEST(Sidu, SimilarityIsMonotoneInDistance) {
    std::vector<double> p;
    for (int i = 0; i <= 20; ++i) p.push_back(1.0 + 0.1 * i);
    const auto sd = similarity_difference(1.0, p, 0.3);
    for (std::size_t i = 1; i < sd.size(); ++i) EXPECT_LT(sd[i], sd[i - 1]);
    for (double v : sd) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Sidu, UpsampleMatchesOracleAndFixesCentres) {
    Image src(3, 2);
    const float v[6] = {0.0f, 1.0f, 0.5f, 0.25f, 1.0f, 0.0f};
    for (int i = 0; i < 6; ++i) src.storage()[i] = v[i];
    const auto up = upsample_bilinear(src, 9, 6);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 6; ++x) EXPECT_NEAR(up(y, x), bilinear_oracle(src, 9, 6, y, x), 1e-6);
    // Odd factor: the centre of each 3x3 block sits exactly on a source pixel.
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 2; ++x) EXPECT_NEAR(up(3 * y + 1, 3 * x + 1), src(y, x), 1e-6);

    Image c(2, 2);
    for (auto& x : c.storage()) x = 0.7f;
    const auto flat = upsample_bilinear(c, 16, 16);
    for (float x : flat.storage()) EXPECT_FLOAT_EQ(x, 0.7f);

    Image step(2, 2);
    step(0, 1) = step(1, 1) = 1.0f;
    const auto s4 = upsample_bilinear(step, 4, 4);
    const float row[4] = {0.0f, 0.25f, 0.75f, 1.0f};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) EXPECT_FLOAT_EQ(s4(y, x), row[x]);
}

TEST(Sidu, HandBuiltModelMatchesDirectComputation) {
    const HandModel hm;
    const auto model = hm.snapshot();
    const Image img = image4();
    const SiduConfig cfg;
    const auto ex = explain_detailed(model, img, cfg);

    EXPECT_NEAR(ex.predictions.original, hm.predict(img), 1e-9);

    // Masks: min-max normalise each 2x2 map, threshold, upsample to 4x4.
    std::vector<Image> masks;
    for (int c = 0; c < 3; ++c) {
        double lo = 1e9, hi = -1e9;
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) {
                lo = std::min(lo, hm.feature(img, c, y, x));
                hi = std::max(hi, hm.feature(img, c, y, x));
            }
        Image b(2, 2);
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x)
                b(y, x) = (hi > lo && (hm.feature(img, c, y, x) - lo) / (hi - lo) > 0.5) ? 1.0f : 0.0f;
        Image m(4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) m(y, x) = static_cast<float>(bilinear_oracle(b, 4, 4, y, x));
        masks.push_back(m);
    }
    // Channel 2 has a negative weight on a non-negative image: all-zero map.
    for (float v : masks[2].storage()) EXPECT_EQ(v, 0.0f);

    std::vector<double> pm, w;
    for (const auto& m : masks) {
        Image x(4, 4);
        for (int i = 0; i < 16; ++i) x.storage()[i] = img.storage()[i] * m.storage()[i];
        pm.push_back(hm.predict(x));
    }
    ASSERT_EQ(ex.predictions.masked.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(ex.predictions.masked[k], pm[k], 1e-9);

    std::vector<double> raw(16, 0.0);
    for (int k = 0; k < 3; ++k) {
        const double d = hm.predict(img) - pm[k];
        const double sd = std::exp(-d * d / (2 * 0.25 * 0.25));
        double u = 0.0;
        for (int j = 0; j < 3; ++j) u += std::abs(pm[k] - pm[j]);
        w.push_back(sd * u);
        EXPECT_NEAR(ex.weights[k], sd * u, 1e-9);
        for (int i = 0; i < 16; ++i) raw[i] += sd * u * masks[k].storage()[i];
    }
    const double lo = *std::min_element(raw.begin(), raw.end()), hi = *std::max_element(raw.begin(), raw.end());
    ASSERT_GT(hi, lo);
    EXPECT_FALSE(ex.heatmap.degenerate);
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(ex.heatmap.values.storage()[i], (raw[i] - lo) / (hi - lo), 1e-6);
    EXPECT_EQ(ex.heatmap.model_tag, "original");
}

TEST(Sidu, SpecExamples) {
    EXPECT_NEAR(similarity_difference(1.0, std::vector<double>{0.0}, 0.25)[0], 3.3546262790251185e-4, 1e-15);
    EXPECT_EQ(uniqueness(std::vector<double>{0.0, 1.0}), (std::vector<double>{1.0, 1.0}));

    const HandModel hm;
    const auto model = hm.snapshot();
    const Image img = image4();
    MaskSet ones{{Image(4, 4)}, {}};
    for (auto& v : ones.masks[0].storage()) v = 1.0f;
    MaskSet zeros{{Image(4, 4)}, {}};
    EXPECT_EQ(masked_predictions(model, img, ones).masked[0], masked_predictions(model, img, ones).original);
    EXPECT_EQ(masked_predictions(model, img, zeros).masked[0], forward(model, Image(4, 4)).prediction);
}

TEST(Sidu, SingleChannelModelIsDegenerate) {
    ArchConfig a;
    a.input_height = 8;
    a.input_width = 8;
    a.conv_blocks = {{1, 3, 1}};
    a.hidden_width = 2;
    Image img(8, 8);
    for (int y = 2; y < 6; ++y) img(y, 3) = 1.0f;
    const auto ex = explain_detailed(init_model(a, 3), img, SiduConfig{});
    EXPECT_EQ(ex.uniqueness, std::vector<double>{0.0});
    EXPECT_TRUE(ex.heatmap.degenerate);
}

TEST(Sidu, ConstantScoreGivesDegenerateHeatmap) {
    HandModel hm;
    hm.fc_w = {0.0f, 0.0f, 0.0f};
    const auto h = explain(hm.snapshot(), image4(), SiduConfig{});
    EXPECT_TRUE(h.degenerate);
    for (float v : h.values.storage()) EXPECT_EQ(v, 0.0f);
}

TEST(Sidu, HeatmapIsNormalisedAndDeterministic) {
    ArchConfig a;
    a.input_height = 32;
    a.input_width = 32;
    const auto m = init_model(a, 6);
    Image img(32, 32);
    Rng rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : img.storage()) v = u(rng);
    const auto ex = explain_detailed(m, img, SiduConfig{});
    EXPECT_EQ(ex.heatmap.values.height(), 32);
    EXPECT_EQ(ex.weights.size(), 64u);
    if (!ex.heatmap.degenerate) {
        const auto [lo, hi] = std::minmax_element(ex.heatmap.values.storage().begin(), ex.heatmap.values.storage().end());
        EXPECT_FLOAT_EQ(*lo, 0.0f);
        EXPECT_FLOAT_EQ(*hi, 1.0f);
    }
    for (double w : ex.weights) EXPECT_GE(w, 0.0);
    const auto again = explain(m, img, SiduConfig{});
    EXPECT_EQ(again.values, ex.heatmap.values);
}

TEST(Sidu, MasksAreBinaryUpsampled) {
    ArchConfig a;
    a.input_height = 32;
    a.input_width = 32;
    const auto m = init_model(a, 6);
    Image img(32, 32);
    for (int y = 8; y < 20; ++y)
        for (int x = 4; x < 14; ++x) img(y, x) = 1.0f;
    const auto set = extract_masks(m, img, SiduConfig{});
    EXPECT_EQ(set.masks.size(), 64u);
    EXPECT_EQ(set.source_shape.height, 4);
    for (const auto& mk : set.masks)
        for (float v : mk.storage()) {
            EXPECT_GE(v, 0.0f);
            EXPECT_LE(v, 1.0f);
        }
}

TEST(Sidu, AdaptiveSigmaScalesWithPrediction) {
    HandModel hm;
    hm.fc_b = 8.0f;
    SiduConfig cfg;
    cfg.sd_sigma_mode = SdSigmaMode::adaptive;
    const auto ex = explain_detailed(hm.snapshot(), image4(), cfg);
    EXPECT_NEAR(ex.sd_sigma_used, 0.25 * ex.predictions.original, 1e-12);
    EXPECT_GT(ex.sd_sigma_used, 0.25);
}

TEST(Sidu, InvalidInputsThrow) {
    SiduConfig bad;
    bad.binarize_threshold = 1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = SiduConfig{};
    bad.sd_sigma = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_THROW(sd_sigma_mode_from_name("wide"), ConfigError);
    const HandModel hm;
    EXPECT_THROW(explain(hm.snapshot(), Image(5, 5), SiduConfig{}), InputError);
    MaskSet empty;
    EXPECT_THROW(compose_heatmap(empty, std::vector<double>{}, "x"), EmptyInputError);
}
