// muxai: synthetic-scene unlearning benchmark driver.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "muxai/checkpoint.hpp"
#include "muxai/dataset_io.hpp"
#include "muxai/error.hpp"
#include "muxai/harness.hpp"
#include "muxai/heatmap_io.hpp"
#include "muxai/png_io.hpp"
#include "muxai/render.hpp"
#include "muxai/report.hpp"

using namespace muxai;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "experiment config (JSON with schema_version)")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "run a single seed instead of the configured list");
    app->add_option("--out", o.out, "output directory");
}

ExperimentConfig resolve(const CommonOptions& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_experiment_config(o.config);
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.out) cfg.output_dir = *o.out;
    cfg.validate();
    return cfg;
}

void log_line(const std::string& msg) { std::cerr << "[muxai] " << msg << std::endl; }

void write_text(const fs::path& p, const std::string& s) {
    write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

fs::path seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) { return cfg.output_dir / std::to_string(seed); }

void cmd_generate(const ExperimentConfig& cfg) {
    for (auto seed : cfg.seeds) {
        GenConfig gen = cfg.gen;
        gen.seed = seed;
        const fs::path dir = seed_dir(cfg, seed) / "dataset";
        log_line("seed " + std::to_string(seed) + ": writing dataset to " + dir.string());
        save_dataset(generate_dataset(gen), gen, dir);
    }
}

void cmd_train(const ExperimentConfig& cfg, const std::string& which) {
    for (auto seed : cfg.seeds) {
        const auto sd = prepare_seed(cfg, seed);
        if (which == "original" || which == "both") {
            log_line("seed " + std::to_string(seed) + ": training Original");
            save_trained_model(cfg, seed, train_original_model(cfg, sd));
        }
        if (which == "retrain" || which == "both") {
            log_line("seed " + std::to_string(seed) + ": training Retrain");
            save_trained_model(cfg, seed, train_retrain_model(cfg, sd));
        }
    }
}

void cmd_unlearn(const ExperimentConfig& cfg, const std::string& method) {
    const auto entries = model_entries(cfg);
    bool ran = false;
    for (auto seed : cfg.seeds) {
        const auto sd = prepare_seed(cfg, seed);
        const auto original = load_checkpoint(model_dir(cfg, seed, Provenance::original));
        if (original.tag() != Provenance::original) throw InputError("the original checkpoint carries another tag");
        for (std::size_t i = 0; i < cfg.unlearn_methods.size(); ++i) {
            const auto& label = entries[i + 2].label;
            if (method != "all" && method != label && method != unlearn_tag_name(cfg.unlearn_methods[i].tag)) continue;
            log_line("seed " + std::to_string(seed) + ": unlearning with " + entries[i + 2].display);
            save_trained_model(cfg, seed, unlearn_model(cfg, sd, original, i));
            ran = true;
        }
    }
    if (!ran) throw ConfigError("no configured unlearning method matches '" + method + "'");
}

void cmd_explain(const ExperimentConfig& cfg, const std::string& label, const std::string& image_path,
                 const std::string& save_stem) {
    if (!image_path.empty()) {
        if (cfg.seeds.size() != 1) throw ConfigError("explaining one image needs a single --seed");
        const auto model = load_checkpoint(cfg.output_dir / std::to_string(cfg.seeds.front()) / label);
        const Image img = from_gray8(decode_png_gray(read_file(image_path)));
        const auto h = explain(model, img, cfg.sidu);
        const fs::path stem = save_stem.empty() ? fs::path(image_path).replace_extension("") += "_sidu" : fs::path(save_stem);
        save_heatmap(h, cfg.sidu, stem);
        write_file(stem.string() + "_overlay.png", encode_png(render_overlay(img, h)));
        log_line("wrote " + stem.string() + ".bin/.json");
        return;
    }
    for (auto seed : cfg.seeds) {
        const auto sd = prepare_seed(cfg, seed);
        const fs::path dir = cfg.output_dir / std::to_string(seed) / label;
        const auto model = load_checkpoint(dir);
        log_line("seed " + std::to_string(seed) + ": explaining " + std::to_string(sd.eval_samples.size()) +
                 " test images with " + label);
        for (std::size_t j = 0; j < sd.eval_samples.size(); ++j) {
            char name[16];
            std::snprintf(name, sizeof name, "%06zu", sd.eval_indices[j]);
            const auto h = explain(model, sd.eval_samples[j].image, cfg.sidu);
            save_heatmap(h, cfg.sidu, dir / "heatmaps" / name);
            write_file(dir / "heatmaps" / (std::string(name) + "_overlay.png"),
                       encode_png(render_overlay(sd.eval_samples[j].image, h)));
        }
    }
}

MetricsReport seed_report(const ExperimentConfig& cfg) {
    MetricsReport r;
    for (const auto& e : model_entries(cfg)) r.model_order.push_back(e.display);
    r.seeds = cfg.seeds;
    r.eval_sample_count = cfg.eval_sample_count;
    r.config = cfg;
    return r;
}

void cmd_evaluate(const ExperimentConfig& cfg) {
    for (auto seed : cfg.seeds) {
        const auto sd = prepare_seed(cfg, seed);
        log_line("seed " + std::to_string(seed) + ": evaluating saved models");
        auto r = seed_report(cfg);
        r.seeds = {seed};
        r.rows = evaluate_models(cfg, sd, load_trained_models(cfg, seed));
        r.aggregates = aggregate_rows(r.rows, r.model_order);
        write_report(r, seed_dir(cfg, seed));
    }
}

void cmd_report(const ExperimentConfig& cfg) {
    auto r = seed_report(cfg);
    for (auto seed : cfg.seeds) {
        const fs::path p = seed_dir(cfg, seed) / "report.json";
        if (!fs::exists(p)) {
            log_line("seed " + std::to_string(seed) + ": no evaluation found, report is partial");
            r.partial = true;
            continue;
        }
        const auto bytes = read_file(p);
        const auto part = report_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
        r.rows.insert(r.rows.end(), part.rows.begin(), part.rows.end());
    }
    r.aggregates = aggregate_rows(r.rows, r.model_order);
    write_report(r, cfg.output_dir);
    std::cout << report_table(r);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Machine-unlearning benchmark on synthetic counting scenes"};
    app.require_subcommand(1);

    CommonOptions gen_o, train_o, unl_o, exp_o, eval_o, rep_o, all_o;
    auto* gen = app.add_subcommand("generate", "generate and save the synthetic dataset");
    add_common(gen, gen_o);

    auto* tr = app.add_subcommand("train", "train Original and/or Retrain");
    add_common(tr, train_o);
    std::string which = "both";
    tr->add_option("--model", which, "original, retrain or both")->check(CLI::IsMember({"original", "retrain", "both"}));

    auto* un = app.add_subcommand("unlearn", "apply unlearning methods to the saved Original");
    add_common(un, unl_o);
    std::string method = "all";
    un->add_option("--method", method, "method tag or label, or all");

    auto* ex = app.add_subcommand("explain", "SIDU heatmaps for a saved model");
    add_common(ex, exp_o);
    std::string label = "original", image, save;
    ex->add_option("--model", label, "model directory label (original, retrain, prune, ...)");
    ex->add_option("--image", image, "explain this PNG instead of the evaluation subset")->check(CLI::ExistingFile);
    ex->add_option("--save", save, "output stem for --image");

    auto* ev = app.add_subcommand("evaluate", "MAE, RMSE, r-HC, h-HC and AS of saved models");
    add_common(ev, eval_o);

    auto* rep = app.add_subcommand("report", "merge per-seed evaluations into report.csv/json/txt");
    add_common(rep, rep_o);

    auto* all = app.add_subcommand("run-all", "the full protocol for every seed");
    add_common(all, all_o);
    bool sweep = false;
    all->add_flag("--sigma-sweep", sweep, "replace Confuse by sigma in {0.05, 0.1, 0.2}");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) cmd_generate(resolve(gen_o));
        if (tr->parsed()) cmd_train(resolve(train_o), which);
        if (un->parsed()) cmd_unlearn(resolve(unl_o), method);
        if (ex->parsed()) cmd_explain(resolve(exp_o), label, image, save);
        if (ev->parsed()) cmd_evaluate(resolve(eval_o));
        if (rep->parsed()) cmd_report(resolve(rep_o));
        if (all->parsed()) {
            auto cfg = resolve(all_o);
            if (sweep) {
                std::vector<UnlearnMethod> methods;
                for (const auto& m : cfg.unlearn_methods)
                    if (m.tag != UnlearnTag::confuse) methods.push_back(m);
                for (double s : {0.05, 0.1, 0.2}) {
                    UnlearnMethod c = ExperimentConfig::default_methods().back();
                    c.sigma = s;
                    methods.push_back(c);
                }
                cfg.unlearn_methods = methods;
            }
            const auto r = run_experiment(cfg, log_line);
            std::cout << report_table(r);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
