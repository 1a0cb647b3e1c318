#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccmqd/training.hpp"

namespace ccmqd {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// {"rows", "cols", "data": [[re, im], ...]} in row-major order.
Json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j);

/// {"dim", "family", "seed", "p", "repeats", "ops": [matrix...]}. Depolarizing
/// maps store p and no ops.
Json channel_to_json(const Channel& ch, NoiseFamily family, std::uint64_t seed);
Channel channel_from_json(const Json& j);

/// {"L_b", "K_b", "dim", "blocks": [matrix...]}.
Json model_to_json(const BackwardModel& model);
BackwardModel model_from_json(const Json& j);

/// Experiment file: TrainConfig plus output directory and export toggles.
struct ExperimentConfig {
  TrainConfig train;
  std::string output_dir = "out";
  bool export_bloch = false;
  bool export_curves = true;
  bool export_channels = false;
  /// Free-text label copied into results (e.g. a stated assumption).
  std::string note;
};

/// Strict parse: unknown keys and a wrong schema_version raise ConfigError
/// naming the offending key.
ExperimentConfig experiment_from_json(const Json& j);
Json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment(const std::filesystem::path& path);

Json train_config_to_json(const TrainConfig& cfg);

/// FNV-1a of the canonical config JSON, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

Json run_result_to_json(const RunResult& run);
RunResult run_result_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// A base experiment expanded over a grid (cartesian product, fixed key order
/// qubits, L_f, K_f, L_b, K_b, lambda, family, strategy) or an explicit list of
/// override cells.
struct SweepCell {
  ExperimentConfig config;
  std::string label;
};
std::vector<SweepCell> expand_sweep(const Json& j);

}  // namespace ccmqd
