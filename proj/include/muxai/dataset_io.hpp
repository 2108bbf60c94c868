#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "muxai/scenegen.hpp"

namespace muxai {

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);
void to_json(nlohmann::json& j, const RebalanceConfig& c);
void from_json(const nlohmann::json& j, RebalanceConfig& c);

// "{split}_{index:06d}.png"
std::string sample_filename(SplitTag tag, std::size_t index);

nlohmann::json split_sidecar(const DatasetSplit& split);

// Writes one 8-bit PNG per image, `{split}.json` sidecars and `manifest.json`.
void save_dataset(const Dataset& data, const GenConfig& config, const std::filesystem::path& dir);
void save_split(const DatasetSplit& split, const std::filesystem::path& dir);

// Images come back 8-bit quantized.
DatasetSplit load_split(const std::filesystem::path& dir, SplitTag tag);

}  // namespace muxai
