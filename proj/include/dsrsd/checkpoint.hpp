#pragma once

#include <cstdint>
#include <filesystem>

#include "dsrsd/config.hpp"
#include "dsrsd/model.hpp"

namespace dsrsd {

/// File layout: 8-byte magic, little-endian u64 header length, JSON header
/// (model dims, run config, config hash, parameter names and shapes), then
/// every parameter as little-endian f64 in header order.
void save_checkpoint(const std::filesystem::path& path, const DsrsdModel& model, const Json& run_config);

struct LoadedCheckpoint {
  DsrsdModel model;
  Json run_config;
  std::uint64_t config_hash = 0;
};

/// Missing file: IoError. Bad magic, truncated blob or a header that does not
/// match the rebuilt model: DataError.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

Json model_config_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& j);

}  // namespace dsrsd
