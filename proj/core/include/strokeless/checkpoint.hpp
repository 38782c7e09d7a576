#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "strokeless/model.hpp"
#include "strokeless/training.hpp"

namespace strokeless {

inline constexpr int kCheckpointFormatVersion = 1;

// Layout: <dir>/manifest.json plus one <name>.f32 file per array, raw
// little-endian float32 in C order. Array names are prefixed g/, d/ (weights
// and singular-vector estimates), adam_g/ and adam_d/ (moments).

void save_checkpoint(const std::filesystem::path& dir, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& dir);
/// Loads only generator and discriminator weights.
Model<float> load_model(const std::filesystem::path& dir);

struct CheckpointInfo {
  int format_version = 0;
  int64_t step = 0;
  ModelConfig model;
  /// FNV-1a of the canonical model-config JSON, as 16 hex digits.
  std::string model_config_hash;
};

CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);
std::string model_config_hash(const ModelConfig& cfg);

}  // namespace strokeless
