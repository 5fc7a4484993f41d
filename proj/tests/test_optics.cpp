#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fransim/optics.hpp"
#include "fransim/random.hpp"
#include "oracles.hpp"

using namespace fransim;
using std::numbers::pi;

namespace {

constexpr double kTight = 1e-12;

DensityMatrix pol_of(const PhotonPairState& s) { return s.pol_marginal(); }

NoisyChannelSpec rotating(Arm arm, WaveplateKind kind, int steps) {
  NoisyChannelSpec spec;
  spec.stages.push_back(RotatingPlateStage{arm, kind, steps});
  return spec;
}

DensityMatrix apply_qubit_channel(const DensityMatrix& rho, const QuantumChannel& ch) {
  static const SubsystemLayout single({"q"});
  return apply_channel(rho, ch, {"q"}, single);
}

}  // namespace

TEST_CASE("jones matrices") {
  const Matrix h = jones({WaveplateKind::kHalf, pi / 8});
  CHECK(oracle::max_abs_diff(h, gates::hadamard()) < kTight);

  const Matrix q0 = jones({WaveplateKind::kQuarter, 0.0});
  const Complex e = std::polar(1.0, -pi / 4);
  CHECK(std::abs(q0(0, 0) - e) < kTight);
  CHECK(std::abs(q0(1, 1) - e * Complex(0, 1)) < kTight);
  CHECK(std::abs(q0(0, 1)) < kTight);

  // Angles are taken modulo pi.
  const Matrix wrapped = jones({WaveplateKind::kQuarter, 0.3 + pi});
  CHECK(oracle::max_abs_diff(wrapped, jones({WaveplateKind::kQuarter, 0.3})) < kTight);
  CHECK(std::abs(WaveplateSpec{WaveplateKind::kHalf, -0.1}.normalized().angle - (pi - 0.1)) < kTight);
}

TEST_CASE("jones matrices are unitary") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(unitarity_residual(jones({WaveplateKind::kHalf, u(rng)})) < kTight);
    CHECK(unitarity_residual(jones({WaveplateKind::kQuarter, u(rng)})) < kTight);
  }
}

TEST_CASE("rotating plate channel examples") {
  const auto h = DensityMatrix::basis_state(2, 0);
  const auto half = rotating_plate_channel(WaveplateKind::kHalf, 360);
  CHECK(oracle::max_abs_diff(apply_qubit_channel(h, half).data(), Matrix::Identity(2, 2) / 2.0) < kTight);
  const auto mixed = DensityMatrix::maximally_mixed(1);
  CHECK(oracle::max_abs_diff(apply_qubit_channel(mixed, half).data(), mixed.data()) < kTight);

  // Quarter-wave: the V population after QWP(t) on |H> is sin^2(2t)/2,
  // averaged over a half turn -> 1/4.
  const auto out = apply_qubit_channel(h, rotating_plate_channel(WaveplateKind::kQuarter, 360));
  double v_pop = 0;
  for (int k = 0; k < 360; ++k) v_pop += std::pow(std::sin(2 * k * pi / 360), 2) / 2.0 / 360.0;
  CHECK(std::abs(out(1, 1).real() - v_pop) < kTight);
  CHECK(std::abs(out(0, 0) - 0.75) < kTight);
  CHECK(std::abs(out(1, 1) - 0.25) < kTight);
  CHECK(std::abs(out(0, 1)) < kTight);
}

TEST_CASE("rotating plate channel is trace preserving and unital") {
  for (int steps : {4, 8, 90, 360}) {
    for (auto kind : {WaveplateKind::kHalf, WaveplateKind::kQuarter}) {
      const auto ch = rotating_plate_channel(kind, steps);
      Matrix completeness = Matrix::Zero(2, 2);
      Matrix unital = Matrix::Zero(2, 2);
      for (const auto& k : ch.kraus()) {
        completeness += k.adjoint() * k;
        unital += k * k.adjoint();
      }
      CHECK(oracle::max_abs_diff(completeness, Matrix::Identity(2, 2)) < kTight);
      CHECK(oracle::max_abs_diff(unital, Matrix::Identity(2, 2)) < kTight);
    }
  }
}

TEST_CASE("rotating half-wave plate depolarizes linear polarization") {
  for (int steps : {4, 6, 8, 90, 360}) {
    const auto ch = rotating_plate_channel(WaveplateKind::kHalf, steps);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const double t = 0.37 * static_cast<double>(seed);
      Vector lin(2);
      lin << std::cos(t), std::sin(t);
      const auto out = apply_qubit_channel(DensityMatrix::from_pure(lin), ch);
      CHECK(oracle::max_abs_diff(out.data(), Matrix::Identity(2, 2) / 2.0) < kTight);

      // A half-wave plate at any angle flips helicity, so only the sigma_y
      // component survives, with its sign reversed.
      const auto psi = random_state(1, StateKind::kPure, seed);
      const double y = (psi.data() * gates::pauli_y()).trace().real();
      const Matrix expected = (Matrix::Identity(2, 2) - y * gates::pauli_y()) / 2.0;
      CHECK(oracle::max_abs_diff(apply_qubit_channel(psi, ch).data(), expected) < kTight);
    }
  }
}

TEST_CASE("noisy channel spec validation") {
  CHECK_THROWS_AS(rotating(Arm::kA, WaveplateKind::kHalf, 3).validate(), std::invalid_argument);
  CHECK_THROWS_AS(rotating(Arm::kA, WaveplateKind::kHalf, 2).validate(), std::invalid_argument);
  CHECK_NOTHROW(rotating(Arm::kA, WaveplateKind::kHalf, 4).validate());
}

TEST_CASE("source states") {
  const Vector bell = balanced_pol_state(0.5);
  CHECK(oracle::max_abs_diff(bell, bell_phi_plus()) < kTight);
  const Vector hh = balanced_pol_state(1.0);
  CHECK(std::abs(hh(0) - 1.0) < kTight);

  const auto et = energy_time_state(1.0, 0.0);
  CHECK(std::abs(fidelity_to(et, bell_phi_plus()) - 1.0) < kTight);
  const auto et_mixed = energy_time_state(0.0, 0.0);
  CHECK(std::abs(et_mixed(0, 0) - 0.5) < kTight);
  CHECK(std::abs(et_mixed(3, 3) - 0.5) < kTight);
  CHECK(std::abs(et_mixed(0, 3)) < kTight);

  const auto phased = energy_time_state(1.0, pi / 2);
  CHECK(std::abs(fidelity_to(phased, bell_phi(pi / 2)) - 1.0) < kTight);

  SourceConfig cfg;
  cfg.balance_p = 1.2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.balance_p = 0.5;
  cfg.franson_visibility = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("energy-time state purity and concurrence") {
  for (double v : {0.0, 0.3, 0.5, 0.979, 1.0}) {
    const auto et = energy_time_state(v, 0.4);
    CHECK(std::abs(purity(et) - (1 + v * v) / 2) < kTight);
    CHECK(std::abs(concurrence(et) - v) < 1e-10);
  }
}

TEST_CASE("source state assembles the interleaved layout") {
  SourceConfig cfg;
  cfg.franson_visibility = 0.979;
  const auto s = make_source_state(cfg);
  CHECK(s.rho().dim() == 16);
  CHECK(std::abs(fidelity_to(s.pol_marginal(), bell_phi_plus()) - 1.0) < kTight);
  CHECK(std::abs(concurrence(s.et_marginal()) - 0.979) < 1e-10);

  cfg.pol_input = PolInput::kPureVH;
  const auto vh = make_source_state(cfg);
  CHECK(std::abs(vh.pol_marginal()(2, 2) - 1.0) < kTight);

  // Product of the two parts: |V>_A |S>_A |H>_B |S>_B carries weight 1/2.
  const Matrix& r = vh.rho().data();
  const int idx = (1 << 3) | (0 << 2) | (0 << 1) | 0;
  CHECK(std::abs(r(idx, idx) - 0.5) < kTight);
}

TEST_CASE("channel examples on the polarization qubits") {
  SourceConfig cfg;
  cfg.pol_input = PolInput::kPureVH;
  const auto vh = make_source_state(cfg);

  // Rotating HWP on A: |V>|H> -> I/2 (x) |H><H|.
  const auto scrambled = apply_noisy_channel(vh, rotating(Arm::kA, WaveplateKind::kHalf, 360));
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 0) = expected(2, 2) = 0.5;
  CHECK(oracle::max_abs_diff(pol_of(scrambled).data(), expected) < kTight);
  CHECK(std::abs(concurrence(pol_of(scrambled))) < kTight);

  // Coherent HWP at 45 deg on A: |V>|H> -> |H>|H>.
  NoisyChannelSpec flip;
  flip.stages.push_back(CoherentStage{{{WaveplateKind::kHalf, pi / 4}}, {}});
  const auto hh = apply_noisy_channel(vh, flip);
  CHECK(std::abs(pol_of(hh)(0, 0) - 1.0) < kTight);

  // Empty channel is the identity.
  const auto same = apply_noisy_channel(vh, NoisyChannelSpec{});
  CHECK(trace_distance(same.rho(), vh.rho()) < kTight);

  // Plates apply in list order.
  NoisyChannelSpec ordered;
  ordered.stages.push_back(CoherentStage{{{WaveplateKind::kHalf, pi / 4}, {WaveplateKind::kHalf, pi / 8}}, {}});
  const auto out = pol_of(apply_noisy_channel(vh, ordered));
  // |V> -HWP45-> |H> -HWP22.5-> |D>.
  Vector d = Vector::Zero(4);
  d(0) = d(2) = 1 / std::sqrt(2.0);
  CHECK(std::abs(fidelity_to(out, d) - 1.0) < kTight);
}

TEST_CASE("noisy channel commutes with energy-time unitaries") {
  const auto& layout = PhotonPairState::layout();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SourceConfig cfg;
    cfg.balance_p = 0.05 + 0.45 * (seed % 7) / 7.0;
    const auto s = make_source_state(cfg);
    NoisyChannelSpec spec;
    spec.stages.push_back(RotatingPlateStage{seed % 2 ? Arm::kA : Arm::kB, WaveplateKind::kQuarter, 8});
    spec.stages.push_back(CoherentStage{{{WaveplateKind::kQuarter, 0.1 * seed}}, {{WaveplateKind::kHalf, 0.2}}});
    const Matrix u = random_unitary(2, seed);
    const auto a = apply_unitary(apply_noisy_channel(s, spec).rho(), u, {labels::kEtA, labels::kEtB}, layout);
    const auto b = apply_noisy_channel(PhotonPairState(apply_unitary(s.rho(), u, {labels::kEtA, labels::kEtB}, layout)),
                                       spec);
    CHECK(trace_distance(a, b.rho()) < kTight);
    // et marginal is untouched by a polarization channel.
    CHECK(trace_distance(apply_noisy_channel(s, spec).et_marginal(), s.et_marginal()) < kTight);
  }
}

TEST_CASE("PBS is a CNOT from polarization to path") {
  const auto& layout = PhotonPairState::layout();
  for (Arm arm : {Arm::kA, Arm::kB}) {
    const auto gate = pbs_cnot(arm);
    CHECK(gate.targets[0] == pol_label(arm));
    CHECK(gate.targets[1] == et_label(arm));
    for (int pol = 0; pol < 2; ++pol) {
      for (int path = 0; path < 2; ++path) {
        const int shift_pol = 3 - layout.index_of(pol_label(arm));
        const int shift_et = 3 - layout.index_of(et_label(arm));
        const int in = (pol << shift_pol) | (path << shift_et);
        const int out = (pol << shift_pol) | ((path ^ pol) << shift_et);
        const auto rho = apply_unitary(DensityMatrix::basis_state(16, in), gate.unitary,
                                       std::span<const std::string_view>(gate.targets), layout);
        CHECK(std::abs(rho(out, out) - 1.0) < kTight);
      }
    }
  }
}
