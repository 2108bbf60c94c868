#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "muxai/model.hpp"
#include "muxai/scenegen.hpp"
#include "muxai/sidu.hpp"
#include "muxai/unlearn.hpp"
#include "muxai/xai_metrics.hpp"

namespace muxai {

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    GenConfig gen;
    RebalanceConfig rebalance;
    ArchConfig arch;
    TrainConfig train_original{50, 5e-4, 10, 0};
    TrainConfig train_retrain{50, 5e-4, 10, 0};
    std::vector<UnlearnMethod> unlearn_methods = default_methods();
    SiduConfig sidu;
    ZeroMassPolicy zero_mass_policy = ZeroMassPolicy::skip;
    ObjectClass forget_class = ObjectClass::human;
    int eval_sample_count = 100;
    int panel_count = 4;  // image panels rendered per seed
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::filesystem::path output_dir = "out";
    bool save_artifacts = true;  // checkpoints, heatmaps, PNGs
    bool save_dataset = false;

    static std::vector<UnlearnMethod> default_methods();
    void validate() const;
};

void to_json(nlohmann::json& j, const UnlearnMethod& m);
void from_json(const nlohmann::json& j, UnlearnMethod& m);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Every random stream of one experiment seed is derived from it.
struct SeedPlan {
    std::uint64_t seed = 0;
    std::uint64_t rebalance = 0;
    std::uint64_t original_init = 0;
    std::uint64_t original_train = 0;
    std::uint64_t retrain_init = 0;
    std::uint64_t retrain_train = 0;
    std::uint64_t unlearn_train = 0;  // shared by every method
    std::uint64_t eval_subset = 0;
    std::uint64_t method_perturbation(std::size_t method_index) const noexcept;
};

SeedPlan seed_plan(std::uint64_t seed) noexcept;

struct SeedData {
    SeedPlan plan;
    Dataset data;
    DatasetSplit train_balanced;  // D, rebalanced
    DatasetSplit train_prime;     // D', rebalanced
    DatasetSplit test_prime;
    std::vector<std::size_t> eval_indices;  // ascending indices into test
    std::vector<SceneSample> eval_samples;
};

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// Display name used in reports: Original, Retrain, Finetune, Prune, Reinit, Confuse.
std::string display_name(Provenance p);

struct TrainedModel {
    std::string name;
    ModelSnapshot model;
    std::vector<double> epoch_losses;
    nlohmann::json provenance;  // method, seeds, fine-tune config, perturbation stats
};

TrainedModel train_original_model(const ExperimentConfig& cfg, const SeedData& sd);
TrainedModel train_retrain_model(const ExperimentConfig& cfg, const SeedData& sd);
TrainedModel unlearn_model(const ExperimentConfig& cfg, const SeedData& sd, const ModelSnapshot& original,
                           std::size_t method_index);

// Directory label and report name of every model, in report order.
struct ModelEntry {
    std::string label;
    std::string display;
};

std::vector<ModelEntry> model_entries(const ExperimentConfig& cfg);

// Loads `{output_dir}/{seed}/{label}/` for every entry.
std::vector<TrainedModel> load_trained_models(const ExperimentConfig& cfg, std::uint64_t seed);

struct ModelRow {
    std::string model;
    std::uint64_t seed = 0;
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<MetricResult> r_hc;
    std::optional<MetricResult> h_hc;
    std::optional<MetricResult> as;  // empty for Original
    std::vector<std::string> heatmap_files;  // stems relative to output_dir
};

struct SummaryStat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation across seeds (0 for one seed)
    std::size_t n = 0;
};

struct AggregateRow {
    std::string model;
    std::optional<SummaryStat> mae, rmse, r_hc, h_hc, as;
};

struct MetricsReport {
    std::vector<std::string> model_order;
    std::vector<std::uint64_t> seeds;
    std::vector<ModelRow> rows;  // ordered by (seed, model)
    std::vector<AggregateRow> aggregates;
    int eval_sample_count = 0;
    nlohmann::json config;
    bool partial = false;
};

// Evaluates trained models on one seed: regression metrics on the relabeled
// test split, SIDU heatmaps on the evaluation subset, r-HC, h-HC and AS
// relative to the first (Original) model. Artifacts are written when enabled.
std::vector<ModelRow> evaluate_models(const ExperimentConfig& cfg, const SeedData& sd,
                                      const std::vector<TrainedModel>& models);

std::vector<AggregateRow> aggregate_rows(const std::vector<ModelRow>& rows, const std::vector<std::string>& model_order);

using ProgressFn = std::function<void(const std::string&)>;

// Full protocol over every configured seed; report files are written to output_dir.
// If a seed fails, the rows gathered so far are written as a partial report
// before the error propagates.
MetricsReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

std::filesystem::path model_dir(const ExperimentConfig& cfg, std::uint64_t seed, Provenance tag);
void save_trained_model(const ExperimentConfig& cfg, std::uint64_t seed, const TrainedModel& m);

}  // namespace muxai
