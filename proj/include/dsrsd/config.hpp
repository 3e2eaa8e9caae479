#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsrsd/data.hpp"
#include "dsrsd/eval.hpp"
#include "dsrsd/gradcheck_suite.hpp"
#include "dsrsd/model.hpp"
#include "dsrsd/trainer.hpp"

namespace dsrsd {

using Json = nlohmann::ordered_json;

struct EvalOptions {
  std::vector<double> p_grid{0.1, 0.3, 0.5};
  std::vector<Modality> modalities{Modality::kA, Modality::kB};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<std::uint64_t> ablation_seeds{0, 1, 2, 3, 4};
  DropoutProbe probe;
  std::size_t threads = 1;
  ExportOptions export_blocks;
  std::string export_split = "test";  // "test" or "all"
};

/// Typed view of the single JSON run document.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::filesystem::path checkpoint;  // empty: <output_dir>/checkpoint.bin
  ModelConfig model;                 // input dims and class count come from the data
  TrainConfig train;
  std::filesystem::path manifest;    // empty: synthetic data
  std::array<double, 3> split{0.7, 0.1, 0.2};
  SyntheticSpec synthetic;
  EvalOptions eval;
  GradCheckSuiteOptions gradcheck;

  std::filesystem::path checkpoint_path() const {
    return checkpoint.empty() ? output_dir / "checkpoint.bin" : checkpoint;
  }
};

/// Every key with its default value.
const Json& default_config_json();

/// Overlays `overrides` onto the defaults. Unknown keys and type mismatches
/// raise ConfigError naming the dotted key.
Json merge_config(const Json& base, const Json& overrides);

/// Sets one leaf from its command-line text, parsed according to the type of
/// the existing value. `key` is a dotted path or a unique leaf alias.
void set_config_value(Json& doc, std::string_view key, std::string_view text);

/// Unique leaf names usable as `--leaf-name` shorthands (underscores become dashes).
std::vector<std::pair<std::string, std::string>> config_aliases();

/// Resolves `--key value` pairs to a dotted path; throws ConfigError when unknown.
std::string resolve_config_key(std::string_view flag);

RunConfig run_config_from_json(const Json& doc);

/// Help text: one line per key with its default.
std::string config_reference();

struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::vector<std::pair<std::string, std::string>> overrides;  // in command-line order
  std::optional<std::string> env_seed;                         // DSRSD_SEED
};

/// Precedence: defaults < file < DSRSD_SEED < command-line flags.
Json resolve_config(const ConfigSources& sources);

Json read_json_file(const std::filesystem::path& path);

/// 64-bit FNV-1a over the compact serialization.
std::uint64_t config_hash(const Json& doc);

}  // namespace dsrsd
