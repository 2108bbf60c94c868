#include "muxai/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "muxai/rng.hpp"

namespace muxai {

namespace {

struct SizeRange {
    int min_w, max_w, min_h, max_h;
};

// Per-class glyph footprint before clamping to the image.
constexpr std::array<SizeRange, kNumClasses> kGlyphSizes{{
    {5, 7, 9, 13},    // human: upright filled ellipse
    {11, 13, 5, 7},   // bicycle: two ring outlines side by side
    {10, 16, 6, 9},   // vehicle: filled rectangle
    {7, 9, 7, 9},     // motorcycle: plus-shaped cross
}};

bool glyph_pixel(ObjectClass cls, int w, int h, int x, int y) {
    const double px = x + 0.5;
    const double py = y + 0.5;
    switch (cls) {
        case ObjectClass::human: {
            const double dx = (px - w / 2.0) / (w / 2.0);
            const double dy = (py - h / 2.0) / (h / 2.0);
            return dx * dx + dy * dy <= 1.0;
        }
        case ObjectClass::bicycle: {
            const double r = h / 2.0;
            const double d1 = std::hypot(px - r, py - r);
            const double d2 = std::hypot(px - (w - r), py - r);
            const double ring = r - 0.75;
            return std::abs(d1 - ring) <= 0.75 || std::abs(d2 - ring) <= 0.75;
        }
        case ObjectClass::vehicle:
            return true;
        case ObjectClass::motorcycle: {
            const int cx = w / 2;
            const int cy = h / 2;
            return std::abs(x - cx) <= 1 || std::abs(y - cy) <= 1;
        }
    }
    return false;
}

int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Draws one glyph and returns its tight box.
BoundingBox draw_glyph(Image& img, ObjectClass cls, Rng& rng) {
    const SizeRange sr = kGlyphSizes[class_index(cls)];
    int w = uniform_int(rng, sr.min_w, sr.max_w);
    int h = uniform_int(rng, sr.min_h, sr.max_h);
    if (cls == ObjectClass::motorcycle) h = w;
    w = std::min(w, img.width());
    h = std::min(h, img.height());
    const int ox = uniform_int(rng, 0, img.width() - w);
    const int oy = uniform_int(rng, 0, img.height() - h);
    const float intensity = std::uniform_real_distribution<float>(0.7f, 1.0f)(rng);

    BoundingBox box{cls, img.width(), img.height(), 0, 0};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!glyph_pixel(cls, w, h, x, y)) continue;
            img(oy + y, ox + x) = intensity;
            box.x0 = std::min(box.x0, ox + x);
            box.y0 = std::min(box.y0, oy + y);
            box.x1 = std::max(box.x1, ox + x + 1);
            box.y1 = std::max(box.y1, oy + y + 1);
        }
    }
    if (box.x1 <= box.x0) {
        // Degenerate 1-pixel images; fall back to the cell itself.
        img(oy, ox) = intensity;
        box = BoundingBox{cls, ox, oy, ox + 1, oy + 1};
    }
    return box;
}

}  // namespace

std::string_view class_name(ObjectClass c) noexcept {
    switch (c) {
        case ObjectClass::human: return "human";
        case ObjectClass::bicycle: return "bicycle";
        case ObjectClass::vehicle: return "vehicle";
        case ObjectClass::motorcycle: return "motorcycle";
    }
    return "unknown";
}

ObjectClass class_from_name(std::string_view name) {
    for (auto c : kAllClasses)
        if (class_name(c) == name) return c;
    throw ConfigError("unknown object class '" + std::string(name) + "'");
}

std::vector<ObjectClass> ClassSet::members() const {
    std::vector<ObjectClass> out;
    for (auto c : kAllClasses)
        if (contains(c)) out.push_back(c);
    return out;
}

std::string_view split_name(SplitTag t) noexcept {
    switch (t) {
        case SplitTag::train: return "train";
        case SplitTag::val: return "val";
        case SplitTag::test: return "test";
    }
    return "unknown";
}

SplitTag split_from_name(std::string_view name) {
    for (auto t : {SplitTag::train, SplitTag::val, SplitTag::test})
        if (split_name(t) == name) return t;
    throw ConfigError("unknown split '" + std::string(name) + "'");
}

void GenConfig::validate() const {
    if (image_width <= 0 || image_height <= 0) throw ConfigError("image dimensions must be positive");
    for (double l : lambda_per_class)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("Poisson rates must be finite and >= 0");
    if (max_objects < 0) throw ConfigError("max_objects must be >= 0");
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    if (train_count < 0 || val_count < 0 || test_count < 0) throw ConfigError("split sizes must be >= 0");
}

SceneSample generate_sample(const GenConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);

    SceneSample s;
    s.image = Image(config.image_height, config.image_width);
    std::normal_distribution<float> noise(0.0f, static_cast<float>(config.noise_std));
    const float base = static_cast<float>(config.background_level);
    for (float& v : s.image.values()) {
        const float n = config.noise_std > 0.0 ? noise(rng) : 0.0f;
        v = std::clamp(base + n, 0.0f, 1.0f);
    }

    ClassCounts counts;
    for (auto c : kAllClasses) {
        const double lambda = config.lambda_per_class[class_index(c)];
        counts[c] = lambda > 0.0 ? std::poisson_distribution<int>(lambda)(rng) : 0;
    }
    // Truncate to max_objects by trimming the most populous class (ties: later class).
    while (counts.total() > config.max_objects) {
        ObjectClass biggest = kAllClasses[0];
        for (auto c : kAllClasses)
            if (counts[c] >= counts[biggest]) biggest = c;
        --counts[biggest];
    }

    std::vector<ObjectClass> order;
    for (auto c : kAllClasses) order.insert(order.end(), static_cast<std::size_t>(counts[c]), c);
    std::shuffle(order.begin(), order.end(), rng);

    s.boxes.reserve(order.size());
    for (auto c : order) s.boxes.push_back(draw_glyph(s.image, c, rng));
    s.counts = counts;
    s.label = counts.total();
    return s;
}

std::uint64_t split_seed(std::uint64_t master_seed, SplitTag tag) noexcept {
    return derive_seed(master_seed, 0x5c1e0000u + static_cast<std::uint64_t>(tag));
}

DatasetSplit generate_split(const GenConfig& config, SplitTag tag, int count) {
    config.validate();
    DatasetSplit split;
    split.split_tag = tag;
    split.generation_seed = split_seed(config.seed, tag);
    split.samples.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i)
        split.samples.push_back(generate_sample(config, derive_seed(split.generation_seed, static_cast<std::uint64_t>(i))));
    return split;
}

Dataset generate_dataset(const GenConfig& config) {
    config.validate();
    if (config.train_count <= 0 || config.val_count <= 0 || config.test_count <= 0)
        throw ConfigError("split sizes must be positive");
    return Dataset{generate_split(config, SplitTag::train, config.train_count),
                   generate_split(config, SplitTag::val, config.val_count),
                   generate_split(config, SplitTag::test, config.test_count)};
}

DatasetSplit relabel(const DatasetSplit& dataset, ObjectClass forget_class) {
    DatasetSplit out = dataset;
    for (auto& s : out.samples) s.label -= s.counts[forget_class];
    return out;
}

int nearest_rank_value(const std::vector<int>& sorted_labels, double percentile) {
    if (sorted_labels.empty()) throw EmptyInputError("percentile of an empty sequence");
    const double n = static_cast<double>(sorted_labels.size());
    // The epsilon absorbs representation error in p*n (0.7 * 1000 = 700.0000000000001).
    auto rank = static_cast<std::size_t>(std::ceil(percentile * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted_labels.size());
    return sorted_labels[rank - 1];
}

DatasetSplit rebalance(const DatasetSplit& train, const RebalanceConfig& cfg, std::uint64_t seed) {
    if (train.empty()) throw EmptyInputError("rebalance of an empty split");
    if (!(cfg.lo_percentile >= 0.0 && cfg.lo_percentile < cfg.hi_percentile && cfg.hi_percentile <= 1.0))
        throw ConfigError("rebalance requires 0 <= lo < hi <= 1");
    if (!(cfg.keep_probability >= 0.0 && cfg.keep_probability <= 1.0) || cfg.duplication_factor < 1)
        throw ConfigError("invalid rebalance magnitudes");

    std::vector<int> labels;
    labels.reserve(train.size());
    for (const auto& s : train.samples) labels.push_back(s.label);
    std::sort(labels.begin(), labels.end());
    const int hi = nearest_rank_value(labels, cfg.hi_percentile);
    const int lo = nearest_rank_value(labels, cfg.lo_percentile);

    DatasetSplit out;
    out.split_tag = train.split_tag;
    out.generation_seed = train.generation_seed;
    Rng rng(seed);
    std::bernoulli_distribution keep(cfg.keep_probability);
    for (const auto& s : train.samples) {
        if (s.label > hi) {
            if (keep(rng)) out.samples.push_back(s);
        } else if (s.label <= lo && s.label < hi) {
            for (int k = 0; k < cfg.duplication_factor; ++k) out.samples.push_back(s);
        } else {
            out.samples.push_back(s);
        }
    }
    return out;
}

RoiMask roi_mask(const SceneSample& sample, ClassSet classes) {
    if (classes.empty()) throw InputError("roi_mask needs at least one class");
    RoiMask mask(sample.image.height(), sample.image.width(), 0);
    for (const auto& b : sample.boxes) {
        if (!classes.contains(b.cls)) continue;
        const int y0 = std::max(b.y0, 0), y1 = std::min(b.y1, mask.height());
        const int x0 = std::max(b.x0, 0), x1 = std::min(b.x1, mask.width());
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) mask(y, x) = 1;
    }
    return mask;
}

}  // namespace muxai
