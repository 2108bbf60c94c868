#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string_view>

#include "muxai/rng.hpp"
#include "muxai/scenegen.hpp"

using namespace muxai;

namespace {

SceneSample sample_with_counts(int h, int b, int v, int m) {
    SceneSample s;
    s.image = Image(8, 8);
    s.counts[ObjectClass::human] = h;
    s.counts[ObjectClass::bicycle] = b;
    s.counts[ObjectClass::vehicle] = v;
    s.counts[ObjectClass::motorcycle] = m;
    s.label = h + b + v + m;
    return s;
}

DatasetSplit split_with_labels(const std::vector<int>& labels) {
    DatasetSplit d;
    for (int l : labels) d.samples.push_back(sample_with_counts(0, l, 0, 0));
    return d;
}

std::uint64_t image_hash(const Image& img) {
    const auto& v = img.storage();
    return std::hash<std::string_view>{}(
        std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float)));
}

}  // namespace

TEST(GenerateSample, SameSeedIsBitIdentical) {
    GenConfig cfg;
    EXPECT_EQ(generate_sample(cfg, 42), generate_sample(cfg, 42));
    EXPECT_FALSE(generate_sample(cfg, 42) == generate_sample(cfg, 43));
}

TEST(GenerateSample, ZeroRateNeverDrawsClass) {
    GenConfig cfg;
    cfg.lambda_per_class = {0.0, 2.0, 2.0, 2.0};
    for (std::uint64_t s = 0; s < 300; ++s) {
        const auto smp = generate_sample(cfg, s);
        EXPECT_EQ(smp.counts[ObjectClass::human], 0);
    }
}

TEST(GenerateSample, RejectsZeroSizeImage) {
    GenConfig cfg;
    cfg.image_width = 0;
    EXPECT_THROW(generate_sample(cfg, 1), ConfigError);
    cfg = GenConfig{};
    cfg.lambda_per_class[2] = -1.0;
    EXPECT_THROW(generate_sample(cfg, 1), ConfigError);
    cfg = GenConfig{};
    cfg.max_objects = -1;
    EXPECT_THROW(generate_sample(cfg, 1), ConfigError);
}

TEST(GenerateSample, PoissonMeanWithinThreeStandardErrors) {
    GenConfig cfg;
    cfg.image_width = cfg.image_height = 32;
    cfg.lambda_per_class = {2.0, 2.0, 2.0, 2.0};
    cfg.max_objects = 1000;
    constexpr int kN = 10000;
    std::array<double, kNumClasses> sum{};
    for (int i = 0; i < kN; ++i) {
        const auto s = generate_sample(cfg, derive_seed(7, static_cast<std::uint64_t>(i)));
        for (auto c : kAllClasses) sum[class_index(c)] += s.counts[c];
    }
    // Poisson(2): variance 2, so SE = sqrt(2 / N).
    const double se = std::sqrt(2.0 / kN);
    for (auto c : kAllClasses) EXPECT_NEAR(sum[class_index(c)] / kN, 2.0, 3.0 * se) << class_name(c);
}

TEST(GenerateSample, TruncatesToMaxObjects) {
    GenConfig cfg;
    cfg.lambda_per_class = {5.0, 5.0, 5.0, 5.0};
    cfg.max_objects = 3;
    for (std::uint64_t s = 0; s < 100; ++s) EXPECT_LE(generate_sample(cfg, s).label, 3);
}

TEST(GenerateSample, AnnotationInvariantsHold) {
    GenConfig cfg;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto smp = generate_sample(cfg, derive_seed(99, s));
        ASSERT_EQ(smp.label, smp.counts.total());
        ASSERT_EQ(static_cast<int>(smp.boxes.size()), smp.counts.total());
        ClassCounts from_boxes;
        for (const auto& b : smp.boxes) {
            ++from_boxes[b.cls];
            ASSERT_TRUE(0 <= b.x0 && b.x0 < b.x1 && b.x1 <= cfg.image_width);
            ASSERT_TRUE(0 <= b.y0 && b.y0 < b.y1 && b.y1 <= cfg.image_height);
        }
        ASSERT_EQ(from_boxes, smp.counts);
        for (float v : smp.image.values()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
    }
}

TEST(GenerateSample, BoxesAreTightAroundGlyphs) {
    GenConfig cfg;
    cfg.noise_std = 0.0;
    cfg.lambda_per_class = {0.0, 0.0, 0.0, 0.0};
    for (auto c : kAllClasses) {
        cfg.lambda_per_class = {0.0, 0.0, 0.0, 0.0};
        cfg.lambda_per_class[class_index(c)] = 1.0;
        cfg.max_objects = 1;
        for (std::uint64_t s = 0; s < 50; ++s) {
            const auto smp = generate_sample(cfg, s);
            if (smp.boxes.empty()) continue;
            const auto& b = smp.boxes.front();
            // Every border row and column of the box has a lit pixel.
            auto lit = [&](int y, int x) { return smp.image(y, x) > 0.0f; };
            bool top = false, bottom = false, left = false, right = false;
            for (int x = b.x0; x < b.x1; ++x) top |= lit(b.y0, x), bottom |= lit(b.y1 - 1, x);
            for (int y = b.y0; y < b.y1; ++y) left |= lit(y, b.x0), right |= lit(y, b.x1 - 1);
            EXPECT_TRUE(top && bottom && left && right) << class_name(c);
        }
    }
}

TEST(GenerateDataset, SplitSizesDeterminismAndDisjointness) {
    GenConfig cfg;
    cfg.seed = 11;
    const auto a = generate_dataset(cfg);
    EXPECT_EQ(a.train.size(), 2000u);
    EXPECT_EQ(a.val.size(), 300u);
    EXPECT_EQ(a.test.size(), 300u);

    const auto b = generate_dataset(cfg);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.val, b.val);
    EXPECT_EQ(a.test, b.test);

    std::set<std::uint64_t> seen;
    for (const auto& s : a.train.samples) seen.insert(image_hash(s.image));
    std::size_t collisions = 0;
    for (const auto* split : {&a.val, &a.test}) {
        for (const auto& s : split->samples) {
            if (!seen.count(image_hash(s.image))) continue;
            // A hash hit alone is not proof; compare the pixels.
            for (const auto& t : a.train.samples) collisions += t.image == s.image;
        }
    }
    EXPECT_EQ(collisions, 0u);
}

TEST(GenerateDataset, RejectsEmptySplits) {
    GenConfig cfg;
    cfg.val_count = 0;
    EXPECT_THROW(generate_dataset(cfg), ConfigError);
}

TEST(Relabel, SubtractsForgottenCount) {
    DatasetSplit d;
    d.samples.push_back(sample_with_counts(2, 1, 1, 0));
    d.samples.push_back(sample_with_counts(0, 3, 0, 1));
    const auto before = d;
    const auto r = relabel(d, ObjectClass::human);
    EXPECT_EQ(r.samples[0].label, 2);
    EXPECT_EQ(r.samples[1].label, 4);
    EXPECT_EQ(r.samples[0].counts, d.samples[0].counts);
    EXPECT_EQ(d, before);
}

TEST(Relabel, IsNotIdempotent) {
    GenConfig cfg;
    const auto split = generate_split(cfg, SplitTag::train, 200);
    const auto once = relabel(split, ObjectClass::human);
    const auto twice = relabel(once, ObjectClass::human);
    for (std::size_t i = 0; i < split.size(); ++i) {
        const int h = split.samples[i].counts[ObjectClass::human];
        EXPECT_LE(once.samples[i].label, split.samples[i].label);
        EXPECT_EQ(once.samples[i].label == split.samples[i].label, h == 0);
        EXPECT_EQ(twice.samples[i].label, split.samples[i].label - 2 * h);
        EXPECT_EQ(once.samples[i].image, split.samples[i].image);
        EXPECT_EQ(once.samples[i].boxes, split.samples[i].boxes);
    }
}

TEST(Rebalance, NearestRank) {
    const std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EXPECT_EQ(nearest_rank_value(v, 0.7), 7);
    EXPECT_EQ(nearest_rank_value(v, 0.1), 1);
    EXPECT_EQ(nearest_rank_value(v, 0.0), 1);
    EXPECT_EQ(nearest_rank_value(v, 1.0), 10);
    EXPECT_EQ(nearest_rank_value(v, 0.71), 8);
}

TEST(Rebalance, ConstantLabelsAreLeftAlone) {
    const auto d = split_with_labels(std::vector<int>(50, 3));
    const auto a = rebalance(d, {}, 5);
    EXPECT_EQ(a, d);
    EXPECT_EQ(rebalance(d, {}, 5), a);
}

TEST(Rebalance, NothingAboveHighThresholdOnlyUpsamples) {
    // 1 x1, 9 x 2: the 70th percentile is 2, nothing exceeds it.
    std::vector<int> labels{1};
    labels.insert(labels.end(), 9, 2);
    const auto d = split_with_labels(labels);
    const auto out = rebalance(d, {}, 1);
    EXPECT_GE(out.size(), d.size());
    EXPECT_EQ(out.size(), 11u);
}

TEST(Rebalance, MatchesDirectSimulation) {
    std::vector<int> labels;
    for (int l = 0; l < 10; ++l) labels.insert(labels.end(), 100, l);
    Rng shuffle_rng(3);
    std::shuffle(labels.begin(), labels.end(), shuffle_rng);
    const auto d = split_with_labels(labels);
    const std::uint64_t seed = 2024;
    const auto out = rebalance(d, {}, seed);

    // Oracle: 70th nearest-rank of 0..9 x100 is 6 (rank 700), 10th is 0 (rank 100).
    std::map<int, int> expected;
    Rng rng(seed);
    std::bernoulli_distribution keep(0.5);
    for (int l : labels) {
        if (l > 6) {
            if (keep(rng)) ++expected[l];
        } else if (l <= 0) {
            expected[l] += 2;
        } else {
            ++expected[l];
        }
    }
    std::map<int, int> got;
    for (const auto& s : out.samples) ++got[s.label];
    EXPECT_EQ(got, expected);
    EXPECT_EQ(got[0], 200);
    for (int l = 1; l <= 6; ++l) EXPECT_EQ(got[l], 100);
    for (int l = 7; l <= 9; ++l) EXPECT_LT(got[l], 100);
}

TEST(Rebalance, ErrorsOnEmptyOrBadPercentiles) {
    EXPECT_THROW(rebalance(DatasetSplit{}, {}, 0), EmptyInputError);
    RebalanceConfig bad;
    bad.lo_percentile = 0.8;
    EXPECT_THROW(rebalance(split_with_labels({1, 2}), bad, 0), ConfigError);
}

TEST(RoiMask, Examples) {
    SceneSample s;
    s.image = Image(8, 8);
    EXPECT_THROW(roi_mask(s, ClassSet{}), InputError);

    const auto empty = roi_mask(s, {ObjectClass::human});
    EXPECT_TRUE(std::all_of(empty.storage().begin(), empty.storage().end(), [](auto v) { return v == 0; }));

    s.boxes.push_back({ObjectClass::human, 2, 2, 4, 4});
    const auto one = roi_mask(s, {ObjectClass::human});
    int sum = 0;
    for (auto v : one.storage()) sum += v;
    EXPECT_EQ(sum, 4);
    EXPECT_EQ(one(2, 2), 1);
    EXPECT_EQ(one(3, 3), 1);
    EXPECT_EQ(one(4, 4), 0);

    s.boxes.push_back({ObjectClass::human, 2, 2, 4, 4});
    EXPECT_EQ(roi_mask(s, {ObjectClass::human}), one);
    EXPECT_EQ(roi_mask(s, {ObjectClass::vehicle}), empty);
}

TEST(RoiMask, UnionDominatesSubsets) {
    GenConfig cfg;
    cfg.lambda_per_class = {2.0, 2.0, 2.0, 2.0};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = generate_sample(cfg, seed);
        const auto all = roi_mask(s, ClassSet::all());
        for (auto c : kAllClasses) {
            const auto sub = roi_mask(s, ClassSet::retained(c));
            for (std::size_t i = 0; i < all.size(); ++i) ASSERT_GE(all.storage()[i], sub.storage()[i]);
        }
    }
}
