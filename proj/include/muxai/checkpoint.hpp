#pragma once

#include <filesystem>

#include <json.hpp>

#include "muxai/model.hpp"

namespace muxai {

void to_json(nlohmann::json& j, const ArchConfig& a);
void from_json(const nlohmann::json& j, ArchConfig& a);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

inline constexpr const char* kCheckpointManifest = "model.json";
inline constexpr const char* kCheckpointBlob = "model.bin";

// Writes `model.json` (arch, metadata, tensor index) and `model.bin`
// (little-endian float32, manifest order) into `dir`.
void save_checkpoint(const ModelSnapshot& model, const std::filesystem::path& dir);
ModelSnapshot load_checkpoint(const std::filesystem::path& dir);

nlohmann::json checkpoint_manifest(const ModelSnapshot& model);
std::vector<std::uint8_t> checkpoint_blob(const ModelSnapshot& model);
ModelSnapshot checkpoint_from(const nlohmann::json& manifest, std::span<const std::uint8_t> blob);

}  // namespace muxai
