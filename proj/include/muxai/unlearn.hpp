#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "muxai/model.hpp"

namespace muxai {

enum class UnlearnTag { finetune, prune, reinit, confuse };

std::string_view unlearn_tag_name(UnlearnTag t) noexcept;
UnlearnTag unlearn_tag_from_name(std::string_view name);
Provenance provenance_of(UnlearnTag t) noexcept;

// Ranking unit for prune/reinit: individual |w|, or whole output filters by L1 norm.
enum class Granularity { per_weight, per_filter };

std::string_view granularity_name(Granularity g) noexcept;
Granularity granularity_from_name(std::string_view name);

// Ranking pool: every prunable weight at once, or each weight tensor on its own.
enum class SelectionScope { global, per_layer };

std::string_view selection_scope_name(SelectionScope s) noexcept;
SelectionScope selection_scope_from_name(std::string_view name);

struct UnlearnMethod {
    UnlearnTag tag = UnlearnTag::finetune;
    double fraction = 0.95;
    double sigma = 0.1;
    Granularity granularity = Granularity::per_weight;
    SelectionScope scope = SelectionScope::global;
    TrainConfig finetune_cfg{50, 5e-4, 3, 0};
    std::uint64_t seed = 0;  // perturbation stream (reinit, confuse)

    void validate() const;
};

// A prunable weight addressed by (tensor position in layer order, flat index).
struct WeightRef {
    std::uint32_t tensor = 0;
    std::uint32_t index = 0;
    friend auto operator<=>(const WeightRef&, const WeightRef&) = default;
};

// Sorted by (tensor, index).
using WeightSelection = std::vector<WeightRef>;

struct WeightCandidate {
    double magnitude = 0.0;
    WeightRef ref;
};

// Picks the `count` smallest candidates by magnitude; ties resolved by
// (tensor, index) so the result does not depend on the input order.
WeightSelection select_smallest(std::vector<WeightCandidate> candidates, std::size_t count);

std::size_t prunable_count(const ModelSnapshot& model) noexcept;

WeightSelection select_low_l1(const ModelSnapshot& model, double fraction,
                              Granularity granularity = Granularity::per_weight,
                              SelectionScope scope = SelectionScope::global);

struct PerturbationStats {
    std::size_t prunable_weights = 0;
    std::size_t selected_weights = 0;
    std::size_t zero_prunable_weights = 0;  // after perturbation, before fine-tuning
    std::size_t noised_conv_weights = 0;
    double sparsity() const noexcept {
        return prunable_weights ? static_cast<double>(zero_prunable_weights) / static_cast<double>(prunable_weights) : 0.0;
    }
};

struct Perturbed {
    ModelSnapshot model;
    PerturbationStats stats;
};

// Perturbation steps alone (no fine-tuning).
Perturbed prune_weights(const ModelSnapshot& model, double fraction, Granularity granularity = Granularity::per_weight,
                        SelectionScope scope = SelectionScope::global);
Perturbed reinit_weights(const ModelSnapshot& model, double fraction, std::uint64_t seed,
                         Granularity granularity = Granularity::per_weight,
                         SelectionScope scope = SelectionScope::global);
Perturbed confuse_weights(const ModelSnapshot& model, double sigma, std::uint64_t seed);

struct UnlearnResult {
    ModelSnapshot model;
    PerturbationStats stats;
    std::vector<double> epoch_losses;
};

UnlearnResult finetune(const ModelSnapshot& model, const DatasetSplit& data_prime, const TrainConfig& cfg);
UnlearnResult prune(const ModelSnapshot& model, double fraction, const DatasetSplit& data_prime, const TrainConfig& cfg,
                    Granularity granularity = Granularity::per_weight, SelectionScope scope = SelectionScope::global);
UnlearnResult reinit(const ModelSnapshot& model, double fraction, const DatasetSplit& data_prime, const TrainConfig& cfg,
                     std::uint64_t seed, Granularity granularity = Granularity::per_weight,
                     SelectionScope scope = SelectionScope::global);
UnlearnResult confuse(const ModelSnapshot& model, double sigma, const DatasetSplit& data_prime, const TrainConfig& cfg,
                      std::uint64_t seed);

UnlearnResult run_unlearning(const UnlearnMethod& method, const ModelSnapshot& model, const DatasetSplit& data_prime);

}  // namespace muxai
