#include "muxai/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace muxai {

namespace {

std::size_t selection_size(double fraction, std::size_t total) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in [0, 1]");
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total) + 1e-9));
    return std::min(k, total);
}

void mark_selection_stats(const ModelSnapshot& m, PerturbationStats& st) {
    st.prunable_weights = 0;
    st.zero_prunable_weights = 0;
    for (const auto& t : m.tensors()) {
        if (!t.is_weight()) continue;
        st.prunable_weights += t.values.size();
        st.zero_prunable_weights += static_cast<std::size_t>(std::count(t.values.begin(), t.values.end(), 0.0f));
    }
}

UnlearnResult finish(Perturbed p, const DatasetSplit& data_prime, const TrainConfig& cfg) {
    auto trained = train(p.model, data_prime, cfg);
    return {std::move(trained.model), p.stats, std::move(trained.epoch_losses)};
}

}  // namespace

std::string_view unlearn_tag_name(UnlearnTag t) noexcept {
    switch (t) {
        case UnlearnTag::finetune: return "finetune";
        case UnlearnTag::prune: return "prune";
        case UnlearnTag::reinit: return "reinit";
        case UnlearnTag::confuse: return "confuse";
    }
    return "unknown";
}

UnlearnTag unlearn_tag_from_name(std::string_view name) {
    for (auto t : {UnlearnTag::finetune, UnlearnTag::prune, UnlearnTag::reinit, UnlearnTag::confuse})
        if (unlearn_tag_name(t) == name) return t;
    throw ConfigError("unknown unlearning method '" + std::string(name) + "'");
}

Provenance provenance_of(UnlearnTag t) noexcept {
    switch (t) {
        case UnlearnTag::finetune: return Provenance::finetune;
        case UnlearnTag::prune: return Provenance::prune;
        case UnlearnTag::reinit: return Provenance::reinit;
        case UnlearnTag::confuse: return Provenance::confuse;
    }
    return Provenance::finetune;
}

std::string_view granularity_name(Granularity g) noexcept {
    return g == Granularity::per_weight ? "per_weight" : "per_filter";
}

Granularity granularity_from_name(std::string_view name) {
    if (name == "per_weight") return Granularity::per_weight;
    if (name == "per_filter") return Granularity::per_filter;
    throw ConfigError("unknown granularity '" + std::string(name) + "'");
}

void UnlearnMethod::validate() const {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in [0, 1]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
    finetune_cfg.validate();
}

WeightSelection select_smallest(std::vector<WeightCandidate> candidates, std::size_t count) {
    count = std::min(count, candidates.size());
    auto less = [](const WeightCandidate& a, const WeightCandidate& b) {
        if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
        return a.ref < b.ref;
    };
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count), candidates.end(), less);
    WeightSelection out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(candidates[i].ref);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t prunable_count(const ModelSnapshot& model) noexcept {
    std::size_t n = 0;
    for (const auto& t : model.tensors())
        if (t.is_weight()) n += t.values.size();
    return n;
}

namespace {

std::vector<WeightCandidate> candidates_of(const ModelSnapshot& model, std::uint32_t ti, Granularity granularity) {
    const auto& t = model.tensors()[ti];
    std::vector<WeightCandidate> out;
    if (granularity == Granularity::per_weight) {
        out.reserve(t.values.size());
        for (std::uint32_t i = 0; i < t.values.size(); ++i) out.push_back({std::abs(static_cast<double>(t.values[i])), {ti, i}});
        return out;
    }
    // Filters are the rows of each weight tensor (one output unit each); the
    // candidate index is the row's first flat index.
    const auto row = static_cast<std::uint32_t>(t.fan_in());
    for (std::uint32_t start = 0; start < t.values.size(); start += row) {
        double l1 = 0.0;
        for (std::uint32_t i = start; i < start + row; ++i) l1 += std::abs(static_cast<double>(t.values[i]));
        out.push_back({l1, {ti, start}});
    }
    return out;
}

void expand_into(const ModelSnapshot& model, const WeightSelection& picked, Granularity granularity, WeightSelection& out) {
    if (granularity == Granularity::per_weight) {
        out.insert(out.end(), picked.begin(), picked.end());
        return;
    }
    for (const auto& f : picked) {
        const auto row = static_cast<std::uint32_t>(model.tensors()[f.tensor].fan_in());
        for (std::uint32_t i = f.index; i < f.index + row; ++i) out.push_back({f.tensor, i});
    }
}

}  // namespace

std::string_view selection_scope_name(SelectionScope s) noexcept {
    return s == SelectionScope::global ? "global" : "per_layer";
}

SelectionScope selection_scope_from_name(std::string_view name) {
    if (name == "global") return SelectionScope::global;
    if (name == "per_layer") return SelectionScope::per_layer;
    throw ConfigError("unknown selection scope '" + std::string(name) + "'");
}

WeightSelection select_low_l1(const ModelSnapshot& model, double fraction, Granularity granularity, SelectionScope scope) {
    const auto tensors = model.tensors();
    WeightSelection out;
    if (scope == SelectionScope::global) {
        std::vector<WeightCandidate> cands;
        for (std::uint32_t ti = 0; ti < tensors.size(); ++ti) {
            if (!tensors[ti].is_weight()) continue;
            auto c = candidates_of(model, ti, granularity);
            cands.insert(cands.end(), c.begin(), c.end());
        }
        const std::size_t k = selection_size(fraction, cands.size());
        expand_into(model, select_smallest(std::move(cands), k), granularity, out);
    } else {
        for (std::uint32_t ti = 0; ti < tensors.size(); ++ti) {
            if (!tensors[ti].is_weight()) continue;
            auto c = candidates_of(model, ti, granularity);
            const std::size_t k = selection_size(fraction, c.size());
            expand_into(model, select_smallest(std::move(c), k), granularity, out);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Perturbed prune_weights(const ModelSnapshot& model, double fraction, Granularity granularity, SelectionScope scope) {
    Perturbed p{ModelSnapshot(model, Provenance::prune), {}};
    const auto sel = select_low_l1(model, fraction, granularity, scope);
    auto tensors = p.model.tensors();
    for (const auto& r : sel) tensors[r.tensor].values[r.index] = 0.0f;
    p.stats.selected_weights = sel.size();
    mark_selection_stats(p.model, p.stats);
    return p;
}

Perturbed reinit_weights(const ModelSnapshot& model, double fraction, std::uint64_t seed, Granularity granularity,
                         SelectionScope scope) {
    Perturbed p{ModelSnapshot(model, Provenance::reinit), {}};
    const auto sel = select_low_l1(model, fraction, granularity, scope);
    auto tensors = p.model.tensors();
    Rng rng(seed);
    for (const auto& r : sel) {
        auto& t = tensors[r.tensor];
        t.values[r.index] = draw_init_weight(t, rng);
    }
    p.stats.selected_weights = sel.size();
    mark_selection_stats(p.model, p.stats);
    return p;
}

Perturbed confuse_weights(const ModelSnapshot& model, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
    Perturbed p{ModelSnapshot(model, Provenance::confuse), {}};
    if (sigma > 0.0) {
        Rng rng(seed);
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& t : p.model.tensors()) {
            if (t.kind != TensorKind::conv_weight) continue;
            for (float& v : t.values) v = static_cast<float>(static_cast<double>(v) + noise(rng));
            p.stats.noised_conv_weights += t.values.size();
        }
    }
    mark_selection_stats(p.model, p.stats);
    return p;
}

UnlearnResult finetune(const ModelSnapshot& model, const DatasetSplit& data_prime, const TrainConfig& cfg) {
    Perturbed p{ModelSnapshot(model, Provenance::finetune), {}};
    mark_selection_stats(p.model, p.stats);
    return finish(std::move(p), data_prime, cfg);
}

UnlearnResult prune(const ModelSnapshot& model, double fraction, const DatasetSplit& data_prime, const TrainConfig& cfg,
                    Granularity granularity, SelectionScope scope) {
    return finish(prune_weights(model, fraction, granularity, scope), data_prime, cfg);
}

UnlearnResult reinit(const ModelSnapshot& model, double fraction, const DatasetSplit& data_prime, const TrainConfig& cfg,
                     std::uint64_t seed, Granularity granularity, SelectionScope scope) {
    return finish(reinit_weights(model, fraction, seed, granularity, scope), data_prime, cfg);
}

UnlearnResult confuse(const ModelSnapshot& model, double sigma, const DatasetSplit& data_prime, const TrainConfig& cfg,
                      std::uint64_t seed) {
    return finish(confuse_weights(model, sigma, seed), data_prime, cfg);
}

UnlearnResult run_unlearning(const UnlearnMethod& method, const ModelSnapshot& model, const DatasetSplit& data_prime) {
    method.validate();
    switch (method.tag) {
        case UnlearnTag::finetune: return finetune(model, data_prime, method.finetune_cfg);
        case UnlearnTag::prune: return prune(model, method.fraction, data_prime, method.finetune_cfg, method.granularity,
                                                 method.scope);
        case UnlearnTag::reinit:
            return reinit(model, method.fraction, data_prime, method.finetune_cfg, method.seed, method.granularity,
                          method.scope);
        case UnlearnTag::confuse: return confuse(model, method.sigma, data_prime, method.finetune_cfg, method.seed);
    }
    throw ConfigError("unknown unlearning method");
}

}  // namespace muxai
