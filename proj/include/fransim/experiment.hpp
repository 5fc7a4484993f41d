#pragma once

// Batch pipelines: the purification run (input and output tomography around
// the transfer), the CHSH balance sweep, custom sweeps and fringe scans.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fransim/config.hpp"

namespace fransim {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kProgramVersion = "0.1.0";
/// Best polarization Bell-state fidelity observed in the laboratory; the
/// model omits mode-overlap and detector imperfections that account for
/// the difference.
inline constexpr double kMeasuredBestFidelity = 0.976;

struct NamedMatrix {
  std::string name;
  Matrix data;
};

struct SeriesTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunReport {
  nlohmann::json payload;
  std::vector<NamedMatrix> matrices;
  std::vector<SeriesTable> series;
};

/// Source -> channel -> {blocked long arms + tomography, transfer + tomography}.
RunReport run_purification(const ExperimentConfig& cfg);
/// S-value before and after the transfer for each balance parameter p.
RunReport run_chsh_sweep(const ExperimentConfig& cfg);
/// Either a single purification-style point, or a sweep over the configured
/// parameter with full metrics per point.
RunReport run_custom(const ExperimentConfig& cfg);
/// Franson fringe of the configured source after the channel.
RunReport run_fringe_scan(const ExperimentConfig& cfg);

/// The payload without wall-clock fields.
nlohmann::json deterministic_payload(const RunReport& report);

std::string series_csv(const SeriesTable& table);

/// report.json, one density-matrix dump per matrix (<name>.dm) and one CSV
/// per series (<name>.csv). Returns the written paths.
std::vector<std::filesystem::path> write_report(const RunReport& report,
                                                const std::filesystem::path& dir);

/// Whitespace-separated tables: <name>_bars.dat (row col magnitude phase)
/// per matrix, <name>.dat per series.
std::vector<std::filesystem::path> emit_plot_data(const RunReport& report,
                                                  const std::filesystem::path& dir);

}  // namespace fransim
