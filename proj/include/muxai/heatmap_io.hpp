#pragma once

#include <filesystem>

#include <json.hpp>

#include "muxai/sidu.hpp"

namespace muxai {

void to_json(nlohmann::json& j, const SiduConfig& c);
void from_json(const nlohmann::json& j, SiduConfig& c);

// `{stem}.bin` holds row-major little-endian float32 values; `{stem}.json`
// holds shape, model tag, degenerate flag and the producing config.
void save_heatmap(const Heatmap& h, const SiduConfig& cfg, const std::filesystem::path& stem);
Heatmap load_heatmap(const std::filesystem::path& stem);

}  // namespace muxai
