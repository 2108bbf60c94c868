#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "muxai/harness.hpp"

namespace muxai {

nlohmann::json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

std::string report_csv(const MetricsReport& r);
std::string report_table(const MetricsReport& r);

// report.csv, report.json and report.txt under `dir`.
void write_report(const MetricsReport& r, const std::filesystem::path& dir);

}  // namespace muxai
