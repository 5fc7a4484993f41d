#include "fransim/optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fransim {

namespace {

constexpr std::array<int, 4> kInterleave = {0, 2, 1, 3};

double reduce_angle(double angle) {
  double r = std::fmod(angle, std::numbers::pi);
  if (r < 0) r += std::numbers::pi;
  if (r >= std::numbers::pi) r = 0.0;
  return r;
}

Matrix coherent_product(const std::vector<WaveplateSpec>& plates) {
  Matrix u = Matrix::Identity(2, 2);
  for (const auto& p : plates) u = jones(p) * u;
  return u;
}

}  // namespace

// -------------------------------------------------------------- PhotonPairState

PhotonPairState::PhotonPairState(DensityMatrix rho) : rho_(std::move(rho)) {
  if (rho_.dim() != 16) {
    throw std::invalid_argument("photon-pair state must be 16-dimensional, got " +
                                std::to_string(rho_.dim()));
  }
}

PhotonPairState PhotonPairState::from_parts(const DensityMatrix& pol, const DensityMatrix& et) {
  if (pol.dim() != 4 || et.dim() != 4) {
    throw std::invalid_argument("from_parts expects two-qubit polarization and energy-time states");
  }
  Matrix joint = permute_qubits(kron(pol.data(), et.data()), kInterleave);
  return PhotonPairState(DensityMatrix::from_unnormalized(joint, pol.weight() * et.weight()));
}

DensityMatrix PhotonPairState::pol_marginal() const {
  return partial_trace(rho_, layout(), {labels::kPolA, labels::kPolB});
}

DensityMatrix PhotonPairState::et_marginal() const {
  return partial_trace(rho_, layout(), {labels::kEtA, labels::kEtB});
}

// ----------------------------------------------------------------- waveplates

std::string_view to_string(WaveplateKind kind) {
  return kind == WaveplateKind::kHalf ? "half" : "quarter";
}

std::string_view to_string(Arm arm) { return arm == Arm::kA ? "A" : "B"; }

std::string_view to_string(PolInput input) {
  switch (input) {
    case PolInput::kBellP: return "bell_p";
    case PolInput::kPureHV: return "pure_HV";
    case PolInput::kPureVH: return "pure_VH";
  }
  return "?";
}

WaveplateSpec WaveplateSpec::normalized() const { return {kind, reduce_angle(angle)}; }

Matrix jones(const WaveplateSpec& spec) {
  const double t = reduce_angle(spec.angle);
  Matrix m(2, 2);
  if (spec.kind == WaveplateKind::kHalf) {
    const double c = std::cos(2 * t);
    const double s = std::sin(2 * t);
    m << c, s, s, -c;
    return m;
  }
  const double c = std::cos(t);
  const double s = std::sin(t);
  const Complex i(0.0, 1.0);
  const Complex off = (1.0 - i) * s * c;
  m << c * c + i * s * s, off, off, s * s + i * c * c;
  return std::polar(1.0, -std::numbers::pi / 4) * m;
}

// --------------------------------------------------------------------- source

void SourceConfig::validate() const {
  if (!(balance_p >= 0.0 && balance_p <= 0.5)) {
    throw std::invalid_argument("balance_p must lie in [0, 0.5], got " + std::to_string(balance_p));
  }
  if (!(franson_visibility >= 0.0 && franson_visibility <= 1.0)) {
    throw std::invalid_argument("franson_visibility must lie in [0, 1], got " +
                                std::to_string(franson_visibility));
  }
  if (!std::isfinite(sum_phase)) throw std::invalid_argument("sum_phase must be finite");
}

Vector balanced_pol_state(double p) {
  Vector v = Vector::Zero(4);
  v(0) = std::sqrt(p);
  v(3) = std::sqrt(1.0 - p);
  return v;
}

DensityMatrix energy_time_state(double visibility, double sum_phase) {
  Vector phi = bell_phi(sum_phase);
  Matrix m = visibility * (phi * phi.adjoint());
  m(0, 0) += (1.0 - visibility) / 2.0;
  m(3, 3) += (1.0 - visibility) / 2.0;
  return DensityMatrix::from_unnormalized(m);
}

PhotonPairState make_source_state(const SourceConfig& cfg) {
  cfg.validate();
  DensityMatrix pol = [&] {
    switch (cfg.pol_input) {
      case PolInput::kPureHV: return DensityMatrix::basis_state(4, 0b01);
      case PolInput::kPureVH: return DensityMatrix::basis_state(4, 0b10);
      case PolInput::kBellP: break;
    }
    return DensityMatrix::from_pure(balanced_pol_state(cfg.balance_p));
  }();
  return PhotonPairState::from_parts(pol, energy_time_state(cfg.franson_visibility, cfg.sum_phase));
}

// -------------------------------------------------------------- noisy channel

void NoisyChannelSpec::validate() const {
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (const auto* r = std::get_if<RotatingPlateStage>(&stages[i])) {
      if (r->steps < 4 || r->steps % 2 != 0) {
        throw std::invalid_argument("channel stage " + std::to_string(i) +
                                    ": rotating plate steps must be even and >= 4, got " +
                                    std::to_string(r->steps));
      }
    }
  }
}

QuantumChannel rotating_plate_channel(WaveplateKind kind, int steps) {
  if (steps < 4 || steps % 2 != 0) {
    throw std::invalid_argument("rotating plate steps must be even and >= 4");
  }
  std::vector<Matrix> kraus;
  kraus.reserve(steps);
  const double scale = 1.0 / std::sqrt(static_cast<double>(steps));
  for (int k = 0; k < steps; ++k) {
    kraus.push_back(scale * jones({kind, k * std::numbers::pi / steps}));
  }
  return QuantumChannel(std::move(kraus), true);
}

std::string_view pol_label(Arm arm) { return arm == Arm::kA ? labels::kPolA : labels::kPolB; }
std::string_view et_label(Arm arm) { return arm == Arm::kA ? labels::kEtA : labels::kEtB; }

PhotonPairState apply_noisy_channel(const PhotonPairState& state, const NoisyChannelSpec& spec) {
  spec.validate();
  const auto& layout = PhotonPairState::layout();
  DensityMatrix rho = state.rho();
  for (const auto& stage : spec.stages) {
    if (const auto* c = std::get_if<CoherentStage>(&stage)) {
      if (!c->arm_a.empty()) rho = apply_unitary(rho, coherent_product(c->arm_a), {labels::kPolA}, layout);
      if (!c->arm_b.empty()) rho = apply_unitary(rho, coherent_product(c->arm_b), {labels::kPolB}, layout);
    } else {
      const auto& r = std::get<RotatingPlateStage>(stage);
      rho = apply_channel(rho, rotating_plate_channel(r.kind, r.steps), {pol_label(r.arm)}, layout);
    }
  }
  return PhotonPairState(std::move(rho));
}

LocalGate pbs_cnot(Arm photon) { return {gates::cnot(), {pol_label(photon), et_label(photon)}}; }

}  // namespace fransim
