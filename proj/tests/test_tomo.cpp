#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fransim/random.hpp"
#include "fransim/tomo.hpp"
#include "oracles.hpp"

using namespace fransim;
using std::numbers::pi;

namespace {

constexpr double kTight = 1e-12;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

DensityMatrix phi_plus() { return DensityMatrix::from_pure(bell_phi_plus()); }

}  // namespace

TEST_CASE("projector examples") {
  const Matrix h = projector(PartySetting{0.0});
  CHECK(std::abs(h(0, 0) - 1.0) < kTight);
  CHECK(std::abs(h(1, 1)) < kTight);
  const Matrix d = projector(PartySetting{pi / 4});
  CHECK(oracle::max_abs_diff(d, Matrix::Constant(2, 2, 0.5)) < kTight);
  // Polarizer at 45 deg behind a QWP at 0 selects circular light.
  const Matrix r = projector(PartySetting{pi / 4, true, 0.0});
  CHECK(std::abs(r(0, 0) - 0.5) < kTight);
  CHECK(std::abs(std::abs(r(0, 1)) - 0.5) < kTight);
  CHECK(std::abs(r(0, 1).real()) < kTight);
}

TEST_CASE("projectors are Hermitian, idempotent and rank one") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const PartySetting s{u(rng), i % 2 == 0, u(rng)};
    const Matrix p = projector(s);
    CHECK(oracle::max_abs_diff(p, p.adjoint()) < kTight);
    CHECK(oracle::max_abs_diff(p * p, p) < kTight);
    CHECK(std::abs(oracle::trace(p) - 1.0) < kTight);
  }
}

TEST_CASE("standard settings") {
  const auto settings = standard_settings();
  const auto names = standard_setting_names();
  REQUIRE(settings.size() == 36);
  REQUIRE(names.size() == 36);
  CHECK(names[0] == "HH");
  CHECK(names[1] == "HV");
  CHECK(names[35] == "LL");
  CHECK(settings_rank(settings) == 16);

  // H/V only does not span the operator space.
  std::vector<MeasurementSetting> zz;
  for (double a : {0.0, pi / 2})
    for (double b : {0.0, pi / 2}) zz.push_back({PartySetting{a}, PartySetting{b}});
  CHECK(settings_rank(zz) == 4);
  const auto data = expected_counts(phi_plus(), zz, 1000);
  CHECK_THROWS_AS(linear_inversion(data), std::invalid_argument);
}

TEST_CASE("simulated count examples") {
  const auto settings = standard_settings();
  const auto data = simulate_counts(phi_plus(), settings, 1e6, 42);
  CHECK(data.counts[1] == 0.0);   // HV
  CHECK(data.counts[6] == 0.0);   // VH
  // HH has mean 5e5 and standard deviation ~707.
  CHECK(std::abs(data.counts[0] - 5e5) < 5 * std::sqrt(5e5));
  for (double c : data.counts) CHECK(c == std::floor(c));

  const auto again = simulate_counts(phi_plus(), settings, 1e6, 42);
  CHECK(again.counts == data.counts);
  const auto other = simulate_counts(phi_plus(), settings, 1e6, 43);
  CHECK(other.counts != data.counts);

  const auto exact = expected_counts(phi_plus(), settings, 1000);
  CHECK(exact.analytic);
  CHECK(std::abs(exact.counts[0] - 500.0) < 1e-9);
  CHECK(std::abs(exact.counts[14] - 500.0) < 1e-9);  // DD
}

TEST_CASE("count data validation") {
  auto data = expected_counts(phi_plus(), standard_settings(), 1000);
  data.analytic = false;
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data = simulate_counts(phi_plus(), standard_settings(), 1000, 1);
  data.counts[3] = -1.0;
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
}

TEST_CASE("linear inversion of exact data") {
  const auto settings = standard_settings();
  for (const auto& rho : {phi_plus(), DensityMatrix::maximally_mixed(2), random_state(2, StateKind::kMixed, 4)}) {
    const auto rec = linear_inversion(expected_counts(rho, settings, 1e4));
    CHECK(trace_distance(rec.rho, rho) < 1e-10);
  }
}

TEST_CASE("linear inversion from finite statistics") {
  const auto settings = standard_settings();
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rec = linear_inversion(simulate_counts(phi_plus(), settings, 1e4, seed));
    good += fidelity_to(rec.rho, bell_phi_plus()) >= 0.98;
    CHECK(hermitian_eigenvalues(rec.rho.data()).minCoeff() >= -1e-10);
  }
  CHECK(good >= 95);
}

TEST_CASE("MLE examples") {
  const auto settings = standard_settings();
  const auto exact = mle_reconstruct(expected_counts(phi_plus(), settings, kDefaultPairsPerSetting));
  CHECK(exact.converged);
  CHECK(trace_distance(exact.rho, phi_plus()) < 1e-8);

  const DensityMatrix target(oracle::dephased_bell(0.979));
  const auto sampled = mle_reconstruct(simulate_counts(target, settings, kDefaultPairsPerSetting, 5));
  CHECK(std::abs(fidelity_to(sampled.rho, bell_phi_plus()) - 0.9895) < 0.005);
}

TEST_CASE("MLE log-likelihood never decreases") {
  const auto settings = standard_settings();
  MleOptions opts;
  opts.record_history = true;
  opts.max_iter = 3000;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto truth = random_state(2, seed % 2 ? StateKind::kMixed : StateKind::kPure, seed);
    const auto data = simulate_counts(truth, settings, 1000, seed);
    const auto rec = mle_reconstruct(data, opts);
    REQUIRE(rec.loglike_history.size() >= 2);
    for (std::size_t i = 1; i < rec.loglike_history.size(); ++i) {
      CHECK(rec.loglike_history[i] >= rec.loglike_history[i - 1]);
    }
    CHECK(std::abs(oracle::trace(rec.rho.data()) - 1.0) < 1e-10);
    CHECK(hermitian_eigenvalues(rec.rho.data()).minCoeff() >= -1e-10);
    CHECK(std::abs(rec.loglike - log_likelihood(data, rec.rho.data())) < 1e-9 * std::abs(rec.loglike));
  }
}

TEST_CASE("estimator consistency") {
  const auto settings = standard_settings();
  const DensityMatrix truth(oracle::dephased_bell(0.9));
  double last = 1.0;
  for (double n : {1e3, 1e4, 1e5}) {
    std::vector<double> td;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      td.push_back(trace_distance(mle_reconstruct(simulate_counts(truth, settings, n, seed)).rho, truth));
    }
    const double m = median(td);
    CHECK(m < last);
    last = m;
  }
}

TEST_CASE("CHSH closed forms") {
  for (double p : {0.0, 0.1, 0.25, 0.4, 0.5, 0.8}) {
    const auto rho = DensityMatrix::from_pure(balanced_pol_state(p));
    CHECK(std::abs(chsh_value(rho) - oracle::chsh_balanced(p)) < kTight);
  }
  for (double v : {0.0, 0.5, 0.979, 1.0}) {
    CHECK(std::abs(chsh_value(DensityMatrix(oracle::dephased_bell(v))) - oracle::chsh_dephased(v)) < kTight);
  }
  CHECK(std::abs(chsh_value(phi_plus()) - 2 * std::sqrt(2.0)) < kTight);
  CHECK(std::abs(correlation(phi_plus(), 0.0, 0.0) - 1.0) < kTight);
}

TEST_CASE("Tsirelson bound and separable bound") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, pi);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto rho = random_state(2, seed % 2 ? StateKind::kMixed : StateKind::kPure, seed);
    const ChshAngles angles{u(rng), u(rng), u(rng), u(rng)};
    CHECK(std::abs(chsh_value(rho, angles)) <= 2 * std::sqrt(2.0) + 1e-12);
  }
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto prod = tensor(random_state(1, StateKind::kMixed, seed), random_state(1, StateKind::kMixed, seed + 999));
    const ChshAngles angles{u(rng), u(rng), u(rng), u(rng)};
    CHECK(std::abs(chsh_value(prod, angles)) <= 2.0 + 1e-12);
  }
}

TEST_CASE("CHSH symmetries") {
  const Matrix xx = oracle::kron(gates::pauli_x(), gates::pauli_x());
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, pi);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto rho = random_state(2, StateKind::kMixed, seed);
    const ChshAngles a{u(rng), u(rng), u(rng), u(rng)};
    // Rotating every analyzer by 90 deg flips both outcomes of each party.
    const ChshAngles shifted{a.alpha + pi / 2, a.alpha_prime + pi / 2, a.beta + pi / 2, a.beta_prime + pi / 2};
    CHECK(std::abs(chsh_value(rho, shifted) - chsh_value(rho, a)) < kTight);
    // Relabeling H <-> V on both photons mirrors the analyzers about 45 deg.
    const auto relabeled = DensityMatrix::from_unnormalized(xx * rho.data() * xx);
    const ChshAngles mirrored{pi / 2 - a.alpha, pi / 2 - a.alpha_prime, pi / 2 - a.beta, pi / 2 - a.beta_prime};
    CHECK(std::abs(chsh_value(relabeled, mirrored) - chsh_value(rho, a)) < kTight);
  }
}

TEST_CASE("Monte-Carlo uncertainties") {
  const auto settings = standard_settings();
  const DensityMatrix out_state(oracle::dephased_bell(0.979));
  MonteCarloOptions opts;
  opts.seed = 3;
  const auto report = monte_carlo_metrics(simulate_counts(out_state, settings, kDefaultPairsPerSetting, 1), opts);
  CHECK(report.n_samples == 100);
  CHECK(report.fidelity.sigma > 0.0);
  CHECK(report.fidelity.sigma < 0.01);
  CHECK(report.concurrence.sigma < 0.01);

  const auto analytic = monte_carlo_metrics(expected_counts(out_state, settings, 1e4), opts);
  CHECK(analytic.fidelity.sigma == 0.0);
  CHECK(analytic.s_value.sigma == 0.0);

  MonteCarloOptions too_few;
  too_few.n_samples = 5;
  CHECK_THROWS_AS(monte_carlo_metrics(expected_counts(out_state, settings, 1e4), too_few), std::invalid_argument);
}

TEST_CASE("Monte-Carlo sigma shrinks when the flux doubles") {
  const auto settings = standard_settings();
  const DensityMatrix truth(oracle::dephased_bell(0.9));
  double s1 = 0, s2 = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MonteCarloOptions opts;
    opts.seed = seed;
    opts.method = ReconstructionMethod::kLinear;
    s1 += monte_carlo_metrics(simulate_counts(truth, settings, 1e4, seed), opts).fidelity.sigma;
    s2 += monte_carlo_metrics(simulate_counts(truth, settings, 2e4, seed), opts).fidelity.sigma;
  }
  const double ratio = s1 / s2;
  CHECK(ratio >= 1.2);
  CHECK(ratio <= 1.7);
}

TEST_CASE("Monte-Carlo results do not depend on the thread count") {
  const auto data = simulate_counts(DensityMatrix(oracle::dephased_bell(0.9)), standard_settings(), 1e4, 2);
  MonteCarloOptions one;
  one.seed = 9;
  MonteCarloOptions four = one;
  four.threads = 4;
  const auto a = monte_carlo_metrics(data, one);
  const auto b = monte_carlo_metrics(data, four);
  CHECK(a.fidelity.sigma == b.fidelity.sigma);
  CHECK(a.s_value.sigma == b.s_value.sigma);
}

TEST_CASE("count CSV round trip") {
  const auto data = simulate_counts(phi_plus(), standard_settings(), 1e4, 12);
  std::stringstream ss;
  write_counts_csv(ss, data);
  std::string header;
  std::getline(std::istringstream(ss.str()), header);
  CHECK(header == "setting_index,theta_a,qwp_a,qwp_theta_a,theta_b,qwp_b,qwp_theta_b,count");
  const auto back = read_counts_csv(ss, 1e4);
  REQUIRE(back.counts.size() == 36);
  CHECK(back.counts == data.counts);
  for (int j = 0; j < 36; ++j) {
    CHECK(oracle::max_abs_diff(joint_projector(back.settings[j]), joint_projector(data.settings[j])) < 1e-7);
  }
  std::istringstream bad("index,count\n0,1\n");
  CHECK_THROWS_AS(read_counts_csv(bad, 1e4), std::invalid_argument);
}

TEST_CASE("analyze reports the reconstruction of the original data") {
  const auto data = expected_counts(DensityMatrix(oracle::dephased_bell(0.979)), standard_settings(), 1e4);
  MonteCarloOptions opts;
  opts.method = ReconstructionMethod::kLinear;
  const auto res = analyze(data, opts);
  const auto pm = state_metrics(res.reconstruction.rho);
  CHECK(std::abs(res.metrics.fidelity.value - pm.fidelity) < kTight);
  CHECK(std::abs(pm.fidelity - 0.9895) < 1e-10);
  CHECK(std::abs(pm.concurrence - 0.979) < 1e-9);
  CHECK(std::abs(pm.s_value - oracle::chsh_dephased(0.979)) < 1e-10);
}
