#pragma once

// Jones-calculus optical elements, noisy polarization channels and the
// hyperentangled photon-pair source.

#include <array>
#include <string_view>
#include <variant>
#include <vector>

#include "fransim/qcore.hpp"

namespace fransim {

/// Joint (pol_A, et_A, pol_B, et_B) state of one photon pair.
class PhotonPairState {
 public:
  explicit PhotonPairState(DensityMatrix rho);

  /// Assembles the canonical interleaved layout from a two-qubit
  /// polarization state (pol_A, pol_B) and an energy-time state (et_A, et_B).
  static PhotonPairState from_parts(const DensityMatrix& pol, const DensityMatrix& et);

  static const SubsystemLayout& layout() { return SubsystemLayout::photon_pair(); }

  const DensityMatrix& rho() const noexcept { return rho_; }
  double weight() const noexcept { return rho_.weight(); }

  /// Reduced state on (pol_A, pol_B).
  DensityMatrix pol_marginal() const;
  /// Reduced state on (et_A, et_B); after the transfer stage these are the
  /// interferometer output paths.
  DensityMatrix et_marginal() const;

 private:
  DensityMatrix rho_;
};

enum class WaveplateKind { kHalf, kQuarter };
enum class Arm { kA, kB };

std::string_view to_string(WaveplateKind kind);
std::string_view to_string(Arm arm);

struct WaveplateSpec {
  WaveplateKind kind = WaveplateKind::kHalf;
  double angle = 0.0;  // fast axis to horizontal, radians

  /// Same plate with the angle reduced to [0, pi).
  WaveplateSpec normalized() const;
};

/// Jones matrix with the global phase convention
///   HWP(t) = [[cos2t, sin2t], [sin2t, -cos2t]],
///   QWP(t) = e^{-i pi/4} [[cos^2 t + i sin^2 t, (1-i) sin t cos t],
///                         [(1-i) sin t cos t, sin^2 t + i cos^2 t]].
Matrix jones(const WaveplateSpec& spec);

enum class PolInput { kBellP, kPureHV, kPureVH };

std::string_view to_string(PolInput input);

struct SourceConfig {
  double balance_p = 0.5;
  double franson_visibility = 0.979;
  double sum_phase = 0.0;  // radians
  PolInput pol_input = PolInput::kBellP;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

/// sqrt(p)|H,H> + sqrt(1-p)|V,V>
Vector balanced_pol_state(double p);

/// V |Phi_phi><Phi_phi| + (1-V)(|SS><SS| + |LL><LL|)/2 on (et_A, et_B).
DensityMatrix energy_time_state(double visibility, double sum_phase);

PhotonPairState make_source_state(const SourceConfig& cfg);

/// Waveplates applied in list order (front element acts first).
struct CoherentStage {
  std::vector<WaveplateSpec> arm_a;
  std::vector<WaveplateSpec> arm_b;
};

/// Time average over one half revolution of a rotating plate.
struct RotatingPlateStage {
  Arm arm = Arm::kA;
  WaveplateKind kind = WaveplateKind::kHalf;
  int steps = 360;
};

using ChannelStage = std::variant<CoherentStage, RotatingPlateStage>;

struct NoisyChannelSpec {
  std::vector<ChannelStage> stages;

  void validate() const;
};

/// Kraus ensemble { jones(kind, k pi / N) / sqrt(N) : k = 0..N-1 }.
QuantumChannel rotating_plate_channel(WaveplateKind kind, int steps);

/// Acts on the polarization qubits only.
PhotonPairState apply_noisy_channel(const PhotonPairState& state, const NoisyChannelSpec& spec);

struct LocalGate {
  Matrix unitary;
  std::array<std::string_view, 2> targets;
};

/// Polarizing beam splitter as a CNOT: polarization controls, path is the
/// target (V flips S <-> L).
LocalGate pbs_cnot(Arm photon);

std::string_view pol_label(Arm arm);
std::string_view et_label(Arm arm);

}  // namespace fransim
