#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fransim/error.hpp"
#include "fransim/transfer.hpp"
#include "oracles.hpp"

using namespace fransim;
using std::numbers::pi;

namespace {

constexpr double kTight = 1e-12;

PhotonPairState source(double p, double v, PolInput input = PolInput::kBellP, double phase = 0.0) {
  SourceConfig cfg;
  cfg.balance_p = p;
  cfg.franson_visibility = v;
  cfg.pol_input = input;
  cfg.sum_phase = phase;
  return make_source_state(cfg);
}

}  // namespace

TEST_CASE("transfer of the ideal source") {
  const auto out = transfer(source(0.5, 1.0), InterferometerConfig{});
  CHECK(std::abs(fidelity_to(out.pol_out, bell_phi_plus()) - 1.0) < kTight);
  CHECK(std::abs(concurrence(out.pol_out) - 1.0) < 1e-10);
  CHECK(out.franson_postselection_fraction == 0.5);
}

TEST_CASE("transfer overwrites a product polarization state") {
  for (auto input : {PolInput::kPureHV, PolInput::kPureVH}) {
    const auto out = transfer(source(0.5, 1.0, input), InterferometerConfig{});
    CHECK(std::abs(fidelity_to(out.pol_out, bell_phi_plus()) - 1.0) < kTight);
  }
}

TEST_CASE("transfer with finite visibility") {
  const auto out = transfer(source(0.5, 0.979, PolInput::kPureVH), InterferometerConfig{});
  CHECK(std::abs(fidelity_to(out.pol_out, bell_phi_plus()) - (1 + 0.979) / 2) < kTight);
  CHECK(std::abs(concurrence(out.pol_out) - 0.979) < 1e-10);
  CHECK(std::abs(purity(out.pol_out) - (1 + 0.979 * 0.979) / 2) < kTight);
  CHECK(oracle::max_abs_diff(out.pol_out.data(), oracle::dephased_bell(0.979)) < kTight);
}

TEST_CASE("transfer swaps polarization and energy-time") {
  const InterferometerConfig cfg{};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto pol = random_state(2, seed % 2 ? StateKind::kMixed : StateKind::kPure, seed);
    const auto et = random_state(2, StateKind::kMixed, seed + 5000);
    const auto in = PhotonPairState::from_parts(pol, et);
    const auto out = transfer(in, cfg);
    CHECK(trace_distance(out.pol_out, et) < 1e-10);
    CHECK(trace_distance(out.path_out, pol) < 1e-10);
    CHECK(trace_distance(out.joint_out.pol_marginal(), out.pol_out) < kTight);
    CHECK(std::abs(out.joint_out.weight() - in.weight()) < kTight);
  }
}

TEST_CASE("port probabilities are deterministic and normalized") {
  const auto in = source(0.3, 0.9);
  const auto a = transfer(in, InterferometerConfig{});
  const auto b = transfer(in, InterferometerConfig{});
  double sum = 0;
  for (int i = 0; i < 4; ++i) {
    CHECK(a.port_probs[i] == b.port_probs[i]);
    CHECK(a.port_probs[i] >= 0.0);
    sum += a.port_probs[i];
  }
  CHECK(std::abs(sum - 1.0) < kTight);
  // Ports carry the input polarization: HH -> (S,S) with probability p.
  CHECK(std::abs(a.port_probs[0] - 0.3) < kTight);
  CHECK(std::abs(a.port_probs[3] - 0.7) < kTight);
}

TEST_CASE("interferometer phases enter as the sum phase") {
  for (double phi = 0.0; phi < 2 * pi; phi += pi / 12) {
    InterferometerConfig cfg;
    cfg.phase_a = 0.3 * phi;
    cfg.phase_b = 0.7 * phi;
    const auto out = transfer(source(0.5, 1.0), cfg);
    CHECK(std::abs(fidelity_to(out.pol_out, bell_phi_plus()) - (1 + std::cos(phi)) / 2) < 1e-10);
    CHECK(std::abs(fidelity_to(out.pol_out, bell_phi(phi)) - 1.0) < 1e-10);
    CHECK(std::abs(concurrence(out.pol_out) - 1.0) < 1e-10);
  }
}

TEST_CASE("fidelity after transfer grows with visibility") {
  double last = -1.0;
  for (int k = 0; k <= 20; ++k) {
    const double v = k / 20.0;
    const double f = fidelity_to(transfer(source(0.5, v), InterferometerConfig{}).pol_out, bell_phi_plus());
    CHECK(f >= last - kTight);
    last = f;
  }
}

TEST_CASE("transferring twice restores the polarization state") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto pol = random_state(2, StateKind::kMixed, seed);
    const auto et = random_state(2, StateKind::kMixed, seed + 777);
    const auto once = transfer(PhotonPairState::from_parts(pol, et), InterferometerConfig{});
    const auto twice = transfer(once.joint_out, InterferometerConfig{});
    CHECK(trace_distance(twice.pol_out, pol) < 1e-10);
    CHECK(trace_distance(twice.path_out, et) < 1e-10);
  }
}

TEST_CASE("blocking the long arms") {
  const auto in = source(0.5, 0.979);
  const auto blocked = block_long_arms(in);
  CHECK(std::abs(blocked.weight() - 0.5) < kTight);
  CHECK(trace_distance(blocked.pol_marginal(), in.pol_marginal()) < kTight);
  CHECK(std::abs(blocked.et_marginal()(0, 0) - 1.0) < kTight);

  // |L,L> has nothing on the short arms.
  const auto pol = DensityMatrix::basis_state(4, 0);
  const auto ll = PhotonPairState::from_parts(pol, DensityMatrix::basis_state(4, 3));
  CHECK_THROWS_AS(block_long_arms(ll), EmptyPostselection);
}

TEST_CASE("fringe visibility follows the Franson visibility") {
  std::vector<double> phases;
  for (int k = 0; k < 72; ++k) phases.push_back(k * 2 * pi / 72);
  for (double v : {0.0, 0.5, 0.979, 1.0}) {
    const auto scan = sum_phase_scan(source(0.5, v, PolInput::kPureVH), InterferometerConfig{}, phases);
    REQUIRE(scan.size() == phases.size());
    for (const auto& pt : scan) {
      CHECK(std::abs(pt.probability - (1 + v * std::cos(pt.sum_phase)) / 2) < 1e-10);
    }
    CHECK(std::abs(fringe_visibility(scan) - v) < 1e-10);
  }
}

TEST_CASE("interferometer validation") {
  InterferometerConfig cfg;
  cfg.coincidence_window_ns = 3.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(transfer(source(0.5, 1.0), cfg), std::invalid_argument);
  cfg.coincidence_window_ns = 1.0;
  cfg.phase_jitter_sigma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.phase_jitter_sigma = 0.0;
  cfg.phase_a = std::nan("");
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("phase jitter: averaged dephasing and single realizations") {
  InterferometerConfig cfg;
  cfg.phase_jitter_sigma = 0.3;
  const auto in = source(0.5, 1.0);
  const auto avg = transfer(in, cfg);
  // Two independent interferometers: coherence factor exp(-sigma^2).
  const double expected = (1 + std::exp(-0.09)) / 2;
  CHECK(std::abs(fidelity_to(avg.pol_out, bell_phi_plus()) - expected) < 1e-10);

  Rng rng(99);
  const int shots = 4000;
  Matrix mean = Matrix::Zero(4, 4);
  for (int i = 0; i < shots; ++i) {
    const auto shot = transfer(in, cfg, rng);
    CHECK(std::abs(purity(shot.pol_out) - 1.0) < 1e-10);
    mean += shot.pol_out.data() / shots;
  }
  // Monte-Carlo error of the coherence is about sigma*sqrt(2)/sqrt(shots)/2.
  CHECK(oracle::max_abs_diff(mean, avg.pol_out.data()) < 0.01);

  InterferometerConfig clean;
  Rng unused(1);
  CHECK(trace_distance(transfer(in, clean, unused).pol_out, transfer(in, clean).pol_out) < kTight);
}
