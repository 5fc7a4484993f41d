#pragma once

// Two-photon polarization tomography: measurement settings, simulated
// Poissonian coincidence counts, reconstruction, metrics and their
// Monte-Carlo uncertainties.

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string_view>
#include <vector>

#include "fransim/optics.hpp"

namespace fransim {

/// Linear polarizer, optionally preceded by a quarter-wave plate.
struct PartySetting {
  double polarizer_angle = 0.0;  // radians
  bool qwp_in = false;
  double qwp_angle = 0.0;

  PartySetting normalized() const;
};

struct MeasurementSetting {
  PartySetting a;
  PartySetting b;
};

/// Analyzer ket: (QWP(qwp_angle))^dag (cos t, sin t) if the plate is in.
Vector analyzer_state(const PartySetting& setting);
/// Rank-1 projector of one party.
Matrix projector(const PartySetting& setting);
Matrix projector(const MeasurementSetting& setting, Arm party);
/// Pi_A (x) Pi_B
Matrix joint_projector(const MeasurementSetting& setting);

/// All 36 pairs of {H, V, D, A, R, L}; party A is the slow index.
std::vector<MeasurementSetting> standard_settings();
/// Names matching standard_settings(): "HH", "HV", ...
std::vector<std::string> standard_setting_names();

/// Default flux: 10.3 kcps coincidences over a 25 s integration.
inline constexpr double kCoincidenceRateCps = 10.3e3;
inline constexpr double kIntegrationTimeS = 25.0;
inline constexpr double kDefaultPairsPerSetting = kCoincidenceRateCps * kIntegrationTimeS;

struct CountData {
  std::vector<MeasurementSetting> settings;
  /// Integer-valued in sampled mode; exact expectation values when analytic.
  std::vector<double> counts;
  double pairs_per_setting = kDefaultPairsPerSetting;
  std::uint64_t seed = 0;
  bool analytic = false;

  void validate() const;
  double total() const;
};

/// Poisson counts; setting j draws from its own substream of `seed`.
CountData simulate_counts(const DensityMatrix& rho, const std::vector<MeasurementSetting>& settings,
                          double pairs_per_setting, std::uint64_t seed);
/// Noiseless expectation values pairs_per_setting * tr(rho Pi_j).
CountData expected_counts(const DensityMatrix& rho, const std::vector<MeasurementSetting>& settings,
                          double pairs_per_setting);

/// CSV with header
/// "setting_index,theta_a,qwp_a,qwp_theta_a,theta_b,qwp_b,qwp_theta_b,count",
/// angles in degrees with 6 decimals.
void write_counts_csv(std::ostream& os, const CountData& data);
CountData read_counts_csv(std::istream& is, double pairs_per_setting);

enum class ReconstructionMethod { kLinear, kMle };
std::string_view to_string(ReconstructionMethod method);

struct ReconstructionResult {
  DensityMatrix rho;
  ReconstructionMethod method;
  int iterations = 0;
  double loglike = 0.0;
  bool converged = false;
  double probability_floor = 0.0;
  /// Model probabilities that had to be lifted to the floor (last iterate).
  int floored = 0;
  std::vector<double> loglike_history;
};

/// Throws std::invalid_argument when the settings do not span the
/// two-qubit operator space.
int settings_rank(const std::vector<MeasurementSetting>& settings);

/// Least squares on the Pauli expansion, then Hermitize, clip negative
/// eigenvalues and renormalize.
ReconstructionResult linear_inversion(const CountData& data);

struct MleOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  double probability_floor = 1e-12;
  bool record_history = false;
};

/// R rho R fixed-point iteration from I/4. Steps that would lower the
/// likelihood are diluted, rho <- (I + eps R) rho (I + eps R), so the
/// log-likelihood never decreases.
ReconstructionResult mle_reconstruct(const CountData& data, const MleOptions& options = {});

ReconstructionResult reconstruct(const CountData& data, ReconstructionMethod method);

/// Sum_j n_j log max(p_j, floor).
double log_likelihood(const CountData& data, const Matrix& rho, double floor = 1e-12);

struct ChshAngles {
  double alpha = 0.0;
  double alpha_prime = std::numbers::pi / 4;
  double beta = std::numbers::pi / 8;
  double beta_prime = 3 * std::numbers::pi / 8;
};

/// cos(2 theta) sigma_z + sin(2 theta) sigma_x
Matrix linear_pauli(double theta);
double correlation(const DensityMatrix& rho, double theta_a, double theta_b);
/// E(a,b) - E(a,b') + E(a',b) + E(a',b')
double chsh_value(const DensityMatrix& rho, const ChshAngles& angles = {});

struct Metric {
  double value = 0.0;
  double sigma = 0.0;
};

struct MetricsReport {
  Metric fidelity;
  Metric concurrence;
  Metric purity;
  Metric s_value;
  int n_samples = 0;
  int dropped = 0;
};

struct PointMetrics {
  double fidelity;
  double concurrence;
  double purity;
  double s_value;
};

PointMetrics state_metrics(const DensityMatrix& rho, const ChshAngles& angles = {});

struct MonteCarloOptions {
  int n_samples = 100;
  std::uint64_t seed = 0;
  ReconstructionMethod method = ReconstructionMethod::kMle;
  int threads = 1;
  ChshAngles angles = {};
};

/// Parametric bootstrap: every resample redraws each count as Poisson with
/// the observed count as its mean. Analytic data is not resampled, so its
/// sigmas are zero. Point values come from the original data.
MetricsReport monte_carlo_metrics(const CountData& data, const MonteCarloOptions& options);

/// Reconstruction of the original data together with the bootstrap report.
struct TomographyResult {
  ReconstructionResult reconstruction;
  MetricsReport metrics;
};

TomographyResult analyze(const CountData& data, const MonteCarloOptions& options);

}  // namespace fransim
