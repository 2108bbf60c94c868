#include "muxai/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "muxai/checkpoint.hpp"
#include "muxai/dataset_io.hpp"
#include "muxai/heatmap_io.hpp"
#include "muxai/png_io.hpp"
#include "muxai/render.hpp"
#include "muxai/report.hpp"

namespace muxai {

namespace {

namespace fs = std::filesystem;

void write_json(const fs::path& path, const nlohmann::json& j) {
    const std::string text = j.dump(2) + "\n";
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string index_stem(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return buf;
}

nlohmann::json train_json(const TrainConfig& c) {
    nlohmann::json j;
    to_json(j, c);
    return j;
}

nlohmann::json stats_json(const PerturbationStats& s) {
    return {{"prunable_weights", s.prunable_weights}, {"selected_weights", s.selected_weights},
            {"zero_prunable_weights", s.zero_prunable_weights}, {"sparsity", s.sparsity()},
            {"noised_conv_weights", s.noised_conv_weights}};
}

// Directory-safe label; methods repeated with different settings get a suffix.
std::string method_label(const ExperimentConfig& cfg, std::size_t index, bool for_display) {
    const auto& m = cfg.unlearn_methods.at(index);
    const auto same = std::count_if(cfg.unlearn_methods.begin(), cfg.unlearn_methods.end(),
                                    [&](const UnlearnMethod& o) { return o.tag == m.tag; });
    std::string base = for_display ? display_name(provenance_of(m.tag)) : std::string(unlearn_tag_name(m.tag));
    if (same <= 1) return base;
    char buf[48];
    if (m.tag == UnlearnTag::confuse)
        std::snprintf(buf, sizeof buf, for_display ? "(sigma=%g)" : "_sigma%g", m.sigma);
    else if (m.tag == UnlearnTag::finetune)
        std::snprintf(buf, sizeof buf, for_display ? "(epochs=%d)" : "_epochs%d", m.finetune_cfg.epochs);
    else
        std::snprintf(buf, sizeof buf, for_display ? "(fraction=%g)" : "_fraction%g", m.fraction);
    return base + buf;
}

fs::path named_dir(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& label) {
    return cfg.output_dir / std::to_string(seed) / label;
}

std::string dir_label(const TrainedModel& m) {
    if (m.provenance.contains("label")) return m.provenance.at("label").get<std::string>();
    return std::string(provenance_name(m.model.tag()));
}

}  // namespace

std::vector<UnlearnMethod> ExperimentConfig::default_methods() {
    const TrainConfig ft{50, 5e-4, 3, 0};
    return {UnlearnMethod{UnlearnTag::finetune, 0.95, 0.1, Granularity::per_weight, SelectionScope::global, ft, 0},
            UnlearnMethod{UnlearnTag::prune, 0.95, 0.1, Granularity::per_weight, SelectionScope::global, ft, 0},
            UnlearnMethod{UnlearnTag::reinit, 0.95, 0.1, Granularity::per_weight, SelectionScope::global, ft, 0},
            UnlearnMethod{UnlearnTag::confuse, 0.95, 0.1, Granularity::per_weight, SelectionScope::global, ft, 0}};
}

void ExperimentConfig::validate() const {
    if (schema_version != kSchemaVersion) throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
    gen.validate();
    arch.validate();
    if (arch.input_height != gen.image_height || arch.input_width != gen.image_width)
        throw ConfigError("model input shape differs from generated image shape");
    train_original.validate();
    train_retrain.validate();
    for (const auto& m : unlearn_methods) m.validate();
    sidu.validate();
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (eval_sample_count < 1 || eval_sample_count > gen.test_count)
        throw ConfigError("eval_sample_count must lie in [1, test split size]");
    if (panel_count < 0) throw ConfigError("panel_count must be >= 0");
}

void to_json(nlohmann::json& j, const UnlearnMethod& m) {
    j = {{"method", unlearn_tag_name(m.tag)}, {"fraction", m.fraction}, {"sigma", m.sigma},
         {"granularity", granularity_name(m.granularity)}, {"scope", selection_scope_name(m.scope)},
         {"finetune", {{"batch_size", m.finetune_cfg.batch_size}, {"learning_rate", m.finetune_cfg.learning_rate},
                       {"epochs", m.finetune_cfg.epochs}, {"optimizer", "sgd"}}}};
}

void from_json(const nlohmann::json& j, UnlearnMethod& m) {
    m = UnlearnMethod{};
    m.tag = unlearn_tag_from_name(j.at("method").get<std::string>());
    m.fraction = j.value("fraction", m.fraction);
    m.sigma = j.value("sigma", m.sigma);
    m.granularity = granularity_from_name(j.value("granularity", std::string("per_weight")));
    m.scope = selection_scope_from_name(j.value("scope", std::string("global")));
    if (j.contains("finetune")) {
        TrainConfig t;
        from_json(j.at("finetune"), t);
        m.finetune_cfg = t;
    }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    nlohmann::json arch, orig, retr, sidu;
    to_json(arch, c.arch);
    auto strip_seed = [](const TrainConfig& t) {
        nlohmann::json x;
        to_json(x, t);
        x.erase("seed");
        return x;
    };
    orig = strip_seed(c.train_original);
    retr = strip_seed(c.train_retrain);
    to_json(sidu, c.sidu);
    nlohmann::json gen = c.gen;
    gen.erase("seed");
    j = {{"schema_version", c.schema_version},
         {"gen", gen},
         {"rebalance", c.rebalance},
         {"arch", arch},
         {"train_original", orig},
         {"train_retrain", retr},
         {"unlearn_methods", c.unlearn_methods},
         {"sidu", sidu},
         {"zero_mass_policy", zero_mass_policy_name(c.zero_mass_policy)},
         {"forget_class", class_name(c.forget_class)},
         {"eval_sample_count", c.eval_sample_count},
         {"panel_count", c.panel_count},
         {"seeds", c.seeds},
         {"output_dir", c.output_dir.generic_string()},
         {"save_artifacts", c.save_artifacts},
         {"save_dataset", c.save_dataset}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c = ExperimentConfig{};
    if (!j.contains("schema_version")) throw ConfigError("config is missing schema_version");
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != kSchemaVersion) throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
    if (j.contains("gen")) c.gen = j.at("gen").get<GenConfig>();
    if (j.contains("rebalance")) c.rebalance = j.at("rebalance").get<RebalanceConfig>();
    if (j.contains("arch")) from_json(j.at("arch"), c.arch);
    if (j.contains("train_original")) from_json(j.at("train_original"), c.train_original);
    if (j.contains("train_retrain")) from_json(j.at("train_retrain"), c.train_retrain);
    if (j.contains("unlearn_methods")) c.unlearn_methods = j.at("unlearn_methods").get<std::vector<UnlearnMethod>>();
    if (j.contains("sidu")) from_json(j.at("sidu"), c.sidu);
    c.zero_mass_policy = zero_mass_policy_from_name(j.value("zero_mass_policy", std::string("skip")));
    c.forget_class = class_from_name(j.value("forget_class", std::string("human")));
    c.eval_sample_count = j.value("eval_sample_count", c.eval_sample_count);
    c.panel_count = j.value("panel_count", c.panel_count);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.output_dir = j.value("output_dir", c.output_dir.generic_string());
    c.save_artifacts = j.value("save_artifacts", c.save_artifacts);
    c.save_dataset = j.value("save_dataset", c.save_dataset);
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    const auto bytes = read_file(path);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end()).get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config '" + path.string() + "': " + e.what());
    }
}

std::uint64_t SeedPlan::method_perturbation(std::size_t method_index) const noexcept {
    return derive_seed(seed, 7, method_index);
}

SeedPlan seed_plan(std::uint64_t seed) noexcept {
    return {seed,
            derive_seed(seed, 1),
            derive_seed(seed, 2),
            derive_seed(seed, 3),
            derive_seed(seed, 4),
            derive_seed(seed, 5),
            derive_seed(seed, 6),
            derive_seed(seed, 8)};
}

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    SeedData sd;
    sd.plan = seed_plan(seed);
    GenConfig gen = cfg.gen;
    gen.seed = seed;
    sd.data = generate_dataset(gen);
    sd.train_balanced = rebalance(sd.data.train, cfg.rebalance, sd.plan.rebalance);
    sd.train_prime = relabel(sd.train_balanced, cfg.forget_class);
    sd.test_prime = relabel(sd.data.test, cfg.forget_class);

    std::vector<std::size_t> idx(sd.data.test.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(sd.plan.eval_subset);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(cfg.eval_sample_count));
    std::sort(idx.begin(), idx.end());
    sd.eval_indices = idx;
    for (auto i : idx) sd.eval_samples.push_back(sd.data.test.samples[i]);
    return sd;
}

std::string display_name(Provenance p) {
    switch (p) {
        case Provenance::original: return "Original";
        case Provenance::retrain: return "Retrain";
        case Provenance::finetune: return "Finetune";
        case Provenance::prune: return "Prune";
        case Provenance::reinit: return "Reinit";
        case Provenance::confuse: return "Confuse";
    }
    return "Unknown";
}

TrainedModel train_original_model(const ExperimentConfig& cfg, const SeedData& sd) {
    TrainConfig tc = cfg.train_original;
    tc.seed = sd.plan.original_train;
    auto res = train(init_model(cfg.arch, sd.plan.original_init, Provenance::original), sd.train_balanced, tc);
    nlohmann::json prov = {{"method", "original"}, {"label", "original"}, {"init_seed", sd.plan.original_init},
                           {"train", train_json(tc)}, {"train_samples", sd.train_balanced.size()},
                           {"epoch_losses", res.epoch_losses}};
    return {"Original", std::move(res.model), std::move(res.epoch_losses), std::move(prov)};
}

TrainedModel train_retrain_model(const ExperimentConfig& cfg, const SeedData& sd) {
    TrainConfig tc = cfg.train_retrain;
    tc.seed = sd.plan.retrain_train;
    auto res = train(init_model(cfg.arch, sd.plan.retrain_init, Provenance::retrain), sd.train_prime, tc);
    nlohmann::json prov = {{"method", "retrain"}, {"label", "retrain"}, {"init_seed", sd.plan.retrain_init},
                           {"train", train_json(tc)}, {"train_samples", sd.train_prime.size()},
                           {"epoch_losses", res.epoch_losses}};
    return {"Retrain", std::move(res.model), std::move(res.epoch_losses), std::move(prov)};
}

TrainedModel unlearn_model(const ExperimentConfig& cfg, const SeedData& sd, const ModelSnapshot& original,
                           std::size_t method_index) {
    UnlearnMethod m = cfg.unlearn_methods.at(method_index);
    m.seed = sd.plan.method_perturbation(method_index);
    m.finetune_cfg.seed = sd.plan.unlearn_train;
    auto res = run_unlearning(m, original, sd.train_prime);
    nlohmann::json method_json = m;
    nlohmann::json prov = {{"method", unlearn_tag_name(m.tag)},
                           {"label", method_label(cfg, method_index, false)},
                           {"fraction", m.fraction},
                           {"sigma", m.sigma},
                           {"granularity", granularity_name(m.granularity)},
                           {"scope", selection_scope_name(m.scope)},
                           {"perturbation_seed", m.seed},
                           {"finetune", train_json(m.finetune_cfg)},
                           {"source_init_seed", original.init_seed()},
                           {"pre_finetune", stats_json(res.stats)},
                           {"epoch_losses", res.epoch_losses}};
    return {method_label(cfg, method_index, true), std::move(res.model), std::move(res.epoch_losses), std::move(prov)};
}

fs::path model_dir(const ExperimentConfig& cfg, std::uint64_t seed, Provenance tag) {
    return named_dir(cfg, seed, std::string(provenance_name(tag)));
}

void save_trained_model(const ExperimentConfig& cfg, std::uint64_t seed, const TrainedModel& m) {
    const fs::path dir = named_dir(cfg, seed, dir_label(m));
    save_checkpoint(m.model, dir);
    write_json(dir / "provenance.json", m.provenance);
}

std::vector<ModelRow> evaluate_models(const ExperimentConfig& cfg, const SeedData& sd,
                                      const std::vector<TrainedModel>& models) {
    std::vector<ModelRow> rows;
    std::vector<Heatmap> original_heatmaps;
    std::vector<std::vector<Heatmap>> all_heatmaps;
    const ClassSet retained = ClassSet::retained(cfg.forget_class);
    const ClassSet forgotten{cfg.forget_class};

    for (const auto& tm : models) {
        ModelRow row;
        row.model = tm.name;
        row.seed = sd.plan.seed;
        const auto reg = evaluate_regression(tm.model, sd.test_prime);
        row.mae = reg.mae;
        row.rmse = reg.rmse;

        std::vector<Heatmap> heatmaps;
        heatmaps.reserve(sd.eval_samples.size());
        for (const auto& s : sd.eval_samples) heatmaps.push_back(explain(tm.model, s.image, cfg.sidu));

        auto coverage = [&](ClassSet classes, const char* name) -> std::optional<MetricResult> {
            try {
                auto r = class_coverage(heatmaps, sd.eval_samples, classes, cfg.zero_mass_policy);
                r.metric = name;
                return r;
            } catch (const UndefinedMetricError&) {
                return std::nullopt;
            }
        };
        row.r_hc = coverage(retained, "r-HC");
        row.h_hc = coverage(forgotten, "h-HC");
        if (tm.model.tag() == Provenance::original) {
            original_heatmaps = heatmaps;
        } else {
            if (original_heatmaps.empty()) throw InputError("the Original model must be evaluated first");
            auto as = attention_shift(heatmaps, original_heatmaps);
            row.as = as;
        }

        if (cfg.save_artifacts) {
            const fs::path dir = named_dir(cfg, sd.plan.seed, dir_label(tm)) / "heatmaps";
            for (std::size_t j = 0; j < heatmaps.size(); ++j) {
                const std::string stem = index_stem(sd.eval_indices[j]);
                save_heatmap(heatmaps[j], cfg.sidu, dir / stem);
                row.heatmap_files.push_back(fs::relative(dir / stem, cfg.output_dir).generic_string());
                write_file(dir / (stem + "_overlay.png"), encode_png(render_overlay(sd.eval_samples[j].image, heatmaps[j])));
                if (tm.model.tag() != Provenance::original)
                    write_file(dir / (stem + "_diff.png"), encode_png(render_attention_diff(original_heatmaps[j], heatmaps[j])));
            }
            write_json(named_dir(cfg, sd.plan.seed, dir_label(tm)) / "metrics.json",
                       {{"model", row.model},
                        {"mae", row.mae},
                        {"rmse", row.rmse},
                        {"r_hc", row.r_hc ? to_json(*row.r_hc) : nlohmann::json()},
                        {"h_hc", row.h_hc ? to_json(*row.h_hc) : nlohmann::json()},
                        {"as", row.as ? to_json(*row.as) : nlohmann::json()}});
        }
        all_heatmaps.push_back(std::move(heatmaps));
        rows.push_back(std::move(row));
    }

    if (cfg.save_artifacts && !models.empty()) {
        const fs::path panels = cfg.output_dir / std::to_string(sd.plan.seed) / "panels";
        const std::size_t n = std::min(sd.eval_samples.size(), static_cast<std::size_t>(cfg.panel_count));
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<RgbImage> tiles{gray_to_rgb(sd.eval_samples[j].image)};
            std::vector<RgbImage> diffs{gray_to_rgb(sd.eval_samples[j].image)};
            for (std::size_t m = 0; m < models.size(); ++m) {
                tiles.push_back(render_overlay(sd.eval_samples[j].image, all_heatmaps[m][j]));
                if (m > 0) diffs.push_back(render_attention_diff(all_heatmaps[0][j], all_heatmaps[m][j]));
            }
            const std::string stem = index_stem(sd.eval_indices[j]);
            write_file(panels / ("heatmaps_" + stem + ".png"), encode_png(hconcat(tiles)));
            if (diffs.size() > 1) write_file(panels / ("attention_diff_" + stem + ".png"), encode_png(hconcat(diffs)));
        }
    }
    return rows;
}

std::vector<AggregateRow> aggregate_rows(const std::vector<ModelRow>& rows, const std::vector<std::string>& model_order) {
    auto summarize = [](const std::vector<double>& v) -> std::optional<SummaryStat> {
        if (v.empty()) return std::nullopt;
        SummaryStat s;
        s.n = v.size();
        for (double x : v) s.mean += x;
        s.mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - s.mean) * (x - s.mean);
            s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        return s;
    };
    std::vector<AggregateRow> out;
    for (const auto& name : model_order) {
        std::vector<double> mae, rmse, rhc, hhc, as;
        for (const auto& r : rows) {
            if (r.model != name) continue;
            mae.push_back(r.mae);
            rmse.push_back(r.rmse);
            if (r.r_hc) rhc.push_back(r.r_hc->value);
            if (r.h_hc) hhc.push_back(r.h_hc->value);
            if (r.as) as.push_back(r.as->value);
        }
        out.push_back({name, summarize(mae), summarize(rmse), summarize(rhc), summarize(hhc), summarize(as)});
    }
    return out;
}

std::vector<ModelEntry> model_entries(const ExperimentConfig& cfg) {
    std::vector<ModelEntry> out{{"original", "Original"}, {"retrain", "Retrain"}};
    for (std::size_t i = 0; i < cfg.unlearn_methods.size(); ++i)
        out.push_back({method_label(cfg, i, false), method_label(cfg, i, true)});
    return out;
}

std::vector<TrainedModel> load_trained_models(const ExperimentConfig& cfg, std::uint64_t seed) {
    std::vector<TrainedModel> out;
    for (const auto& e : model_entries(cfg)) {
        const fs::path dir = named_dir(cfg, seed, e.label);
        const auto bytes = read_file(dir / "provenance.json");
        auto prov = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
        if (prov.is_discarded()) throw IoError("malformed provenance in '" + dir.string() + "'");
        auto losses = prov.value("epoch_losses", std::vector<double>{});
        out.push_back({e.display, load_checkpoint(dir), std::move(losses), std::move(prov)});
    }
    return out;
}

MetricsReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    auto note = [&](const std::string& msg) {
        if (progress) progress(msg);
    };
    MetricsReport report;
    report.seeds = cfg.seeds;
    report.eval_sample_count = cfg.eval_sample_count;
    report.config = cfg;
    for (const auto& e : model_entries(cfg)) report.model_order.push_back(e.display);

    try {
        for (auto seed : cfg.seeds) {
            note("seed " + std::to_string(seed) + ": generating data");
            const SeedData sd = prepare_seed(cfg, seed);
            if (cfg.save_dataset) {
                GenConfig gen = cfg.gen;
                gen.seed = seed;
                save_dataset(sd.data, gen, cfg.output_dir / std::to_string(seed) / "dataset");
            }
            std::vector<TrainedModel> models;
            note("seed " + std::to_string(seed) + ": training Original");
            models.push_back(train_original_model(cfg, sd));
            note("seed " + std::to_string(seed) + ": training Retrain");
            models.push_back(train_retrain_model(cfg, sd));
            for (std::size_t i = 0; i < cfg.unlearn_methods.size(); ++i) {
                note("seed " + std::to_string(seed) + ": unlearning with " + method_label(cfg, i, true));
                models.push_back(unlearn_model(cfg, sd, models.front().model, i));
            }
            if (cfg.save_artifacts)
                for (const auto& m : models) save_trained_model(cfg, seed, m);

            note("seed " + std::to_string(seed) + ": evaluating");
            auto rows = evaluate_models(cfg, sd, models);
            report.rows.insert(report.rows.end(), rows.begin(), rows.end());
        }
    } catch (...) {
        report.partial = true;
        report.aggregates = aggregate_rows(report.rows, report.model_order);
        try {
            write_report(report, cfg.output_dir);
        } catch (...) {
        }
        throw;
    }
    report.aggregates = aggregate_rows(report.rows, report.model_order);
    write_report(report, cfg.output_dir);
    return report;
}

}  // namespace muxai
