#include "muxai/report.hpp"

#include <cstdio>
#include <sstream>

#include "muxai/error.hpp"
#include "muxai/png_io.hpp"

namespace muxai {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json opt_json(const std::optional<MetricResult>& r) { return r ? to_json(*r) : nlohmann::json(); }

std::optional<MetricResult> opt_metric(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    MetricResult r;
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.n_skipped = j.at("n_skipped").get<std::size_t>();
    r.policy = zero_mass_policy_from_name(j.at("policy").get<std::string>());
    return r;
}

nlohmann::json stat_json(const std::optional<SummaryStat>& s) {
    if (!s) return nullptr;
    return {{"mean", s->mean}, {"std", s->std}, {"n", s->n}};
}

std::optional<SummaryStat> stat_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return SummaryStat{j.at("mean").get<double>(), j.at("std").get<double>(), j.at("n").get<std::size_t>()};
}

std::string cell(const std::optional<MetricResult>& r) { return r ? num(r->value) : std::string(); }
std::string cell_mean(const std::optional<SummaryStat>& s) { return s ? num(s->mean) : std::string(); }
std::string cell_std(const std::optional<SummaryStat>& s) { return s ? num(s->std) : std::string(); }

std::string pm(const std::optional<SummaryStat>& s) {
    if (!s) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f +/- %.4f", s->mean, s->std);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"model", row.model}, {"seed", row.seed}, {"mae", row.mae}, {"rmse", row.rmse},
                        {"r_hc", opt_json(row.r_hc)}, {"h_hc", opt_json(row.h_hc)}, {"as", opt_json(row.as)},
                        {"heatmap_files", row.heatmap_files}});
    nlohmann::json aggs = nlohmann::json::array();
    for (const auto& a : r.aggregates)
        aggs.push_back({{"model", a.model}, {"mae", stat_json(a.mae)}, {"rmse", stat_json(a.rmse)},
                        {"r_hc", stat_json(a.r_hc)}, {"h_hc", stat_json(a.h_hc)}, {"as", stat_json(a.as)}});
    return {{"schema_version", kSchemaVersion},
            {"partial", r.partial},
            {"model_order", r.model_order},
            {"seeds", r.seeds},
            {"eval_sample_count", r.eval_sample_count},
            {"std_convention", {{"as", std::string(kStdConvention)}, {"across_seeds", "sample"}}},
            {"rows", rows},
            {"aggregates", aggs},
            {"config", r.config}};
}

MetricsReport report_from_json(const nlohmann::json& j) {
    try {
        MetricsReport r;
        r.partial = j.at("partial").get<bool>();
        r.model_order = j.at("model_order").get<std::vector<std::string>>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        r.eval_sample_count = j.at("eval_sample_count").get<int>();
        r.config = j.value("config", nlohmann::json());
        for (const auto& x : j.at("rows")) {
            ModelRow row;
            row.model = x.at("model").get<std::string>();
            row.seed = x.at("seed").get<std::uint64_t>();
            row.mae = x.at("mae").get<double>();
            row.rmse = x.at("rmse").get<double>();
            row.r_hc = opt_metric(x.at("r_hc"));
            row.h_hc = opt_metric(x.at("h_hc"));
            row.as = opt_metric(x.at("as"));
            row.heatmap_files = x.value("heatmap_files", std::vector<std::string>{});
            r.rows.push_back(std::move(row));
        }
        for (const auto& x : j.at("aggregates"))
            r.aggregates.push_back({x.at("model").get<std::string>(), stat_from(x.at("mae")), stat_from(x.at("rmse")),
                                    stat_from(x.at("r_hc")), stat_from(x.at("h_hc")), stat_from(x.at("as"))});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed report: ") + e.what());
    }
}

std::string report_csv(const MetricsReport& r) {
    std::ostringstream os;
    os << "model,seed,mae,rmse,r_hc,h_hc,as\n";
    for (const auto& row : r.rows)
        os << row.model << ',' << row.seed << ',' << num(row.mae) << ',' << num(row.rmse) << ',' << cell(row.r_hc)
           << ',' << cell(row.h_hc) << ',' << cell(row.as) << '\n';
    for (const auto& a : r.aggregates) {
        os << a.model << ",mean," << cell_mean(a.mae) << ',' << cell_mean(a.rmse) << ',' << cell_mean(a.r_hc) << ','
           << cell_mean(a.h_hc) << ',' << cell_mean(a.as) << '\n';
        os << a.model << ",std," << cell_std(a.mae) << ',' << cell_std(a.rmse) << ',' << cell_std(a.r_hc) << ','
           << cell_std(a.h_hc) << ',' << cell_std(a.as) << '\n';
    }
    return os.str();
}

std::string report_table(const MetricsReport& r) {
    std::ostringstream os;
    char buf[256];
    os << "Relabeled test MAE/RMSE; heatmap metrics over " << r.eval_sample_count << " test images; "
       << r.seeds.size() << " seed(s), mean +/- sample std\n";
    if (r.partial) os << "PARTIAL: the run stopped before every seed finished\n";
    std::snprintf(buf, sizeof buf, "%-22s %-20s %-20s %-20s %-20s %-20s\n", "Model", "MAE", "RMSE", "r-HC", "h-HC", "AS");
    os << buf;
    for (const auto& a : r.aggregates) {
        std::snprintf(buf, sizeof buf, "%-22s %-20s %-20s %-20s %-20s %-20s\n", a.model.c_str(), pm(a.mae).c_str(),
                      pm(a.rmse).c_str(), pm(a.r_hc).c_str(), pm(a.h_hc).c_str(), pm(a.as).c_str());
        os << buf;
    }
    return os.str();
}

void write_report(const MetricsReport& r, const std::filesystem::path& dir) {
    write_text(dir / "report.csv", report_csv(r));
    write_text(dir / "report.json", report_to_json(r).dump(2) + "\n");
    write_text(dir / "report.txt", report_table(r));
}

}  // namespace muxai
