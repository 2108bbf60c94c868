#include "muxai/xai_metrics.hpp"

#include <cmath>

namespace muxai {

std::string_view zero_mass_policy_name(ZeroMassPolicy p) noexcept { return p == ZeroMassPolicy::skip ? "skip" : "zero"; }

ZeroMassPolicy zero_mass_policy_from_name(std::string_view name) {
    if (name == "skip") return ZeroMassPolicy::skip;
    if (name == "zero") return ZeroMassPolicy::zero;
    throw ConfigError("unknown zero-mass policy '" + std::string(name) + "'");
}

nlohmann::json to_json(const MetricResult& r) {
    return {{"metric", r.metric},       {"value", r.value},
            {"n_samples", r.n_samples}, {"n_skipped", r.n_skipped},
            {"policy", zero_mass_policy_name(r.policy)}, {"std_convention", kStdConvention}};
}

MetricResult heatmap_coverage(std::span<const Heatmap> heatmaps, std::span<const RoiMask> masks, ZeroMassPolicy policy) {
    if (heatmaps.size() != masks.size()) throw InputError("heatmap and mask lists differ in length");
    MetricResult r{"HC", 0.0, 0, 0, policy};
    double acc = 0.0;
    for (std::size_t j = 0; j < heatmaps.size(); ++j) {
        const auto& h = heatmaps[j].values;
        const auto& m = masks[j];
        if (!h.same_shape(m)) throw InputError("heatmap and mask shapes differ");
        double mass = 0.0, inside = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double v = h.storage()[i];
            mass += v;
            if (m.storage()[i]) inside += v;
        }
        if (mass > 0.0) {
            acc += inside / mass;
            ++r.n_samples;
        } else if (policy == ZeroMassPolicy::zero) {
            ++r.n_samples;
        } else {
            ++r.n_skipped;
        }
    }
    if (r.n_samples == 0) throw UndefinedMetricError("heatmap coverage has no samples with positive mass", r.n_skipped);
    r.value = acc / static_cast<double>(r.n_samples);
    return r;
}

MetricResult class_coverage(std::span<const Heatmap> heatmaps, std::span<const SceneSample> samples, ClassSet classes,
                            ZeroMassPolicy policy) {
    if (heatmaps.size() != samples.size()) throw InputError("heatmap and sample lists differ in length");
    std::vector<Heatmap> kept_h;
    std::vector<RoiMask> kept_m;
    std::size_t empty_masks = 0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        RoiMask m = roi_mask(samples[j], classes);
        bool any = false;
        for (auto v : m.storage()) any = any || v != 0;
        if (!any) {
            ++empty_masks;
            continue;
        }
        kept_h.push_back(heatmaps[j]);
        kept_m.push_back(std::move(m));
    }
    if (kept_h.empty())
        throw UndefinedMetricError("no sample contains objects of the requested classes", empty_masks);
    MetricResult r;
    try {
        r = heatmap_coverage(kept_h, kept_m, policy);
    } catch (const UndefinedMetricError& e) {
        throw UndefinedMetricError(e.what(), e.skipped() + empty_masks);
    }
    r.n_skipped += empty_masks;
    return r;
}

double population_std(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw InputError("maps differ in size");
    if (a.empty()) throw EmptyInputError("standard deviation of an empty map");
    const double n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += static_cast<double>(a[i]) - static_cast<double>(b[i]);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]) - mean;
        var += d * d;
    }
    return std::sqrt(var / n);
}

MetricResult attention_shift(std::span<const Heatmap> unlearned, std::span<const Heatmap> original) {
    if (unlearned.size() != original.size()) throw InputError("heatmap lists differ in length");
    if (unlearned.empty()) throw EmptyInputError("attention shift over no samples");
    MetricResult r{"AS", 0.0, unlearned.size(), 0, ZeroMassPolicy::skip};
    double acc = 0.0;
    for (std::size_t j = 0; j < unlearned.size(); ++j) {
        if (!unlearned[j].values.same_shape(original[j].values)) throw InputError("heatmap shapes differ");
        acc += population_std(unlearned[j].values.values(), original[j].values.values());
    }
    r.value = acc / static_cast<double>(unlearned.size());
    return r;
}

}  // namespace muxai
