#include "fransim/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fransim/error.hpp"

namespace fransim {

namespace {

const SubsystemLayout& pair_layout() { return PhotonPairState::layout(); }

// Steps 2-4 for both photons (phase-independent part), as one 16x16 unitary.
const Matrix& swap_network() {
  static const Matrix u = [] {
    Matrix full = Matrix::Identity(16, 16);
    for (Arm arm : {Arm::kA, Arm::kB}) {
      std::array<std::string_view, 2> pe = {pol_label(arm), et_label(arm)};
      const LocalGate pbs = pbs_cnot(arm);
      full = embed(gates::cnot_reversed(), pe, pair_layout()) * full;  // long-arm HWP
      full = embed(pbs.unitary, pbs.targets, pair_layout()) * full;
      full = embed(gates::cnot_reversed(), pe, pair_layout()) * full;  // port HWP
    }
    return full;
  }();
  return u;
}

QuantumChannel phase_damping(double coherence) {
  std::vector<Matrix> kraus = {std::sqrt((1.0 + coherence) / 2.0) * gates::identity(1),
                               std::sqrt((1.0 - coherence) / 2.0) * gates::pauli_z()};
  return QuantumChannel(std::move(kraus), true);
}

TransferOutcome run_transfer(const PhotonPairState& state, double phase_a, double phase_b,
                             double jitter_coherence) {
  const auto& layout = pair_layout();
  Matrix phases = kron(kron(gates::identity(1), gates::phase(phase_a)),
                       kron(gates::identity(1), gates::phase(phase_b)));
  DensityMatrix rho = apply_unitary(state.rho(), phases,
                                    {labels::kPolA, labels::kEtA, labels::kPolB, labels::kEtB},
                                    layout);
  if (jitter_coherence < 1.0) {
    QuantumChannel damp = phase_damping(jitter_coherence);
    rho = apply_channel(rho, damp, {labels::kEtA}, layout);
    rho = apply_channel(rho, damp, {labels::kEtB}, layout);
  }
  const Matrix& u = swap_network();
  PhotonPairState joint(DensityMatrix::from_unnormalized(u * rho.data() * u.adjoint(), rho.weight()));
  DensityMatrix pol = joint.pol_marginal();
  DensityMatrix path = joint.et_marginal();
  std::array<double, 4> ports{};
  for (int k = 0; k < 4; ++k) ports[k] = path(k, k).real();
  return TransferOutcome{std::move(joint), std::move(pol), std::move(path), ports,
                         kFransonPostselectionFraction};
}

}  // namespace

void InterferometerConfig::validate() const {
  if (!std::isfinite(phase_a) || !std::isfinite(phase_b)) {
    throw std::invalid_argument("interferometer phases must be finite");
  }
  if (!(delta_t_ns > 0.0)) throw std::invalid_argument("delta_t_ns must be positive");
  if (!(coincidence_window_ns > 0.0)) {
    throw std::invalid_argument("coincidence_window_ns must be positive");
  }
  if (coincidence_window_ns >= delta_t_ns) {
    throw std::invalid_argument("coincidence_window_ns (" + std::to_string(coincidence_window_ns) +
                                ") must be shorter than delta_t_ns (" +
                                std::to_string(delta_t_ns) + ")");
  }
  if (!(phase_jitter_sigma >= 0.0) || !std::isfinite(phase_jitter_sigma)) {
    throw std::invalid_argument("phase_jitter_sigma must be finite and non-negative");
  }
}

TransferOutcome transfer(const PhotonPairState& state, const InterferometerConfig& cfg) {
  cfg.validate();
  const double coherence = std::exp(-cfg.phase_jitter_sigma * cfg.phase_jitter_sigma / 2.0);
  return run_transfer(state, cfg.phase_a, cfg.phase_b, coherence);
}

TransferOutcome transfer(const PhotonPairState& state, const InterferometerConfig& cfg,
                         Rng& jitter_rng) {
  cfg.validate();
  double da = 0.0;
  double db = 0.0;
  if (cfg.phase_jitter_sigma > 0.0) {
    std::normal_distribution<double> jitter(0.0, cfg.phase_jitter_sigma);
    da = jitter(jitter_rng);
    db = jitter(jitter_rng);
  }
  return run_transfer(state, cfg.phase_a + da, cfg.phase_b + db, 1.0);
}

PhotonPairState block_long_arms(const PhotonPairState& state) {
  Matrix short_short = Matrix::Zero(4, 4);
  short_short(0, 0) = 1.0;  // |S,S><S,S| on (et_A, et_B)
  QuantumChannel block({short_short}, false);
  try {
    return PhotonPairState(apply_channel(state.rho(), block, {labels::kEtA, labels::kEtB},
                                         pair_layout()));
  } catch (const EmptyPostselection&) {
    throw EmptyPostselection("blocking the long arms leaves no coincidences");
  }
}

std::vector<FringePoint> sum_phase_scan(const PhotonPairState& state,
                                        const InterferometerConfig& cfg,
                                        std::span<const double> sum_phases) {
  cfg.validate();
  // even parity in the D/A basis: (I + X(x)X) / 2
  const Matrix even = 0.5 * (gates::identity(2) + kron(gates::pauli_x(), gates::pauli_x()));
  std::vector<FringePoint> out;
  out.reserve(sum_phases.size());
  for (double phi : sum_phases) {
    InterferometerConfig point = cfg;
    point.phase_a = phi - cfg.phase_b;
    TransferOutcome t = transfer(state, point);
    double prob = (t.pol_out.data() * even).trace().real();
    out.push_back({phi, std::clamp(prob, 0.0, 1.0)});
  }
  return out;
}

double fringe_visibility(std::span<const FringePoint> scan) {
  if (scan.empty()) throw std::invalid_argument("fringe_visibility: empty scan");
  auto [lo, hi] = std::minmax_element(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
    return a.probability < b.probability;
  });
  const double denom = hi->probability + lo->probability;
  return denom > 0.0 ? (hi->probability - lo->probability) / denom : 0.0;
}

}  // namespace fransim
