#pragma once

// Experiment configuration and its JSON representation. Angles are stored
// in degrees in files ("*_deg" keys) and in radians in memory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fransim/optics.hpp"
#include "fransim/tomo.hpp"
#include "fransim/transfer.hpp"

namespace fransim {

enum class CountMode { kSampled, kAnalytic };
enum class SweepParameter { kP, kVisibility, kSumPhase };

std::string_view to_string(CountMode mode);
std::string_view to_string(SweepParameter parameter);

struct TomographyConfig {
  double pairs_per_setting = kDefaultPairsPerSetting;
  ReconstructionMethod method = ReconstructionMethod::kMle;
  int n_mc_samples = 100;
  CountMode mode = CountMode::kSampled;
};

struct SweepConfig {
  SweepParameter parameter = SweepParameter::kP;
  std::vector<double> values;  // sum_phase values in radians
};

struct ExperimentConfig {
  SourceConfig source;
  NoisyChannelSpec channel;
  InterferometerConfig interferometer;
  TomographyConfig tomography;
  std::optional<SweepConfig> sweep;
  std::uint64_t seed = 1;
  std::string output_dir = "fransim-out";
  int threads = 1;
};

/// Throws ConfigError naming the offending field, e.g. "source.balance_p".
ExperimentConfig parse_config(const nlohmann::json& tree);
/// Parse errors carry line and column.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully materialized tree; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& cfg);

struct Diagnostic {
  std::string field;
  std::string message;
};

/// Checks every invariant without running anything.
std::vector<Diagnostic> validate(const ExperimentConfig& cfg);

}  // namespace fransim
