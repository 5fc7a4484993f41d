#pragma once

// Franson-type entanglement transfer between the energy-time and the
// polarization degree of freedom of a photon pair.
//
// Per photon X the stage applies
//   1. the interferometer phase e^{i phase_X} on the long arm |L>,
//   2. a long-arm half-wave plate: X on pol conditioned on et = L,
//   3. the polarizing beam splitter: X on et/path conditioned on pol = V,
//   4. an output-port half-wave plate: X on pol conditioned on path = L.
// Steps 2-4 compose to SWAP(pol_X, et_X), so the energy-time state lands on
// the polarization qubits and the polarization state on the output paths.

#include <array>
#include <span>
#include <vector>

#include "fransim/optics.hpp"
#include "fransim/random.hpp"

namespace fransim {

/// Fraction of coincidences kept when the S,L / L,S side peaks are discarded.
inline constexpr double kFransonPostselectionFraction = 0.5;

struct InterferometerConfig {
  double phase_a = 0.0;  // radians
  double phase_b = 0.0;
  double delta_t_ns = 2.6;
  double coincidence_window_ns = 1.0;
  double phase_jitter_sigma = 0.0;  // radians, per interferometer

  double sum_phase() const noexcept { return phase_a + phase_b; }
  /// Throws std::invalid_argument; the window must be shorter than the
  /// imbalance for the side peaks to be separable.
  void validate() const;
};

struct TransferOutcome {
  PhotonPairState joint_out;
  DensityMatrix pol_out;
  DensityMatrix path_out;
  /// Probabilities of the (S,S), (S,L), (L,S), (L,L) output-port combinations.
  std::array<double, 4> port_probs;
  double franson_postselection_fraction = kFransonPostselectionFraction;
};

/// Density-matrix mode: phase jitter enters as its ensemble average, a
/// dephasing factor e^{-sigma^2/2} on each long-arm coherence.
TransferOutcome transfer(const PhotonPairState& state, const InterferometerConfig& cfg);

/// Single realization: draws one Gaussian phase offset per interferometer
/// from `jitter_rng`.
TransferOutcome transfer(const PhotonPairState& state, const InterferometerConfig& cfg,
                         Rng& jitter_rng);

/// Projects both energy-time qubits onto the short arm (input tomography).
/// Throws EmptyPostselection if nothing survives.
PhotonPairState block_long_arms(const PhotonPairState& state);

struct FringePoint {
  double sum_phase;
  double probability;
};

/// Probability of equal outcomes in a diagonal-basis polarization analysis
/// of both outputs, as a function of the interferometer sum phase.
std::vector<FringePoint> sum_phase_scan(const PhotonPairState& state,
                                        const InterferometerConfig& cfg,
                                        std::span<const double> sum_phases);

/// (max - min) / (max + min) over the scan.
double fringe_visibility(std::span<const FringePoint> scan);

}  // namespace fransim
