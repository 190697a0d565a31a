#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "veil/models.hpp"
#include "veil/training.hpp"

namespace veil {

// Checkpoint layout:
//   "VEIL1"                 5-byte magic
//   u64 little-endian       byte length of the JSON manifest
//   manifest (UTF-8 JSON)   {"format", "spec", "attributes", "metadata",
//                            "tensors": [{name, shape, dtype: "f64", offset}]}
//   payload                 raw little-endian doubles; offsets are relative
//                           to the start of the payload
// Reloading restores every parameter bit-for-bit.
inline constexpr std::string_view kCheckpointMagic = "VEIL1";

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LoadedCheckpoint {
  JointModel model;
  nlohmann::json metadata;  // caller-supplied: config echo, vocab, tagset
};

std::string serialize_checkpoint(JointModel& model, const nlohmann::json& metadata);
LoadedCheckpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, JointModel& model,
                     const nlohmann::json& metadata);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace veil
