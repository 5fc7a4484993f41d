#include "fransim/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fransim/parallel.hpp"
#include "fransim/random.hpp"

namespace fransim {

namespace {

using Mat4 = Eigen::Matrix4cd;
using Ket4 = Eigen::Vector4cd;

constexpr double kDeg = std::numbers::pi / 180.0;

double reduce_angle(double angle) {
  double r = std::fmod(angle, std::numbers::pi);
  if (r < 0) r += std::numbers::pi;
  if (r >= std::numbers::pi) r = 0.0;
  return r;
}

Ket4 joint_ket(const MeasurementSetting& s) {
  Vector a = analyzer_state(s.a);
  Vector b = analyzer_state(s.b);
  Ket4 k;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) k(2 * i + j) = a(i) * b(j);
  }
  return k;
}

std::vector<Ket4> joint_kets(const std::vector<MeasurementSetting>& settings) {
  std::vector<Ket4> kets;
  kets.reserve(settings.size());
  for (const auto& s : settings) kets.push_back(joint_ket(s));
  return kets;
}

double expectation(const Ket4& k, const Mat4& rho) { return (k.adjoint() * rho * k)(0, 0).real(); }

double trace_distance4(const Mat4& a, const Mat4& b) {
  Mat4 d = a - b;
  d = 0.5 * (d + d.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Mat4> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Mat4 normalized(const Mat4& m) {
  Mat4 h = 0.5 * (m + m.adjoint());
  return h / h.trace().real();
}

// Two-qubit Pauli basis sigma_a (x) sigma_b, a and b in {I, X, Y, Z}.
const std::array<Matrix, 16>& pauli_basis() {
  static const std::array<Matrix, 16> basis = [] {
    std::array<Matrix, 4> single = {gates::identity(1), gates::pauli_x(), gates::pauli_y(),
                                    gates::pauli_z()};
    std::array<Matrix, 16> out;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) out[4 * a + b] = kron(single[a], single[b]);
    }
    return out;
  }();
  return basis;
}

Eigen::MatrixXd design_matrix(const std::vector<MeasurementSetting>& settings) {
  Eigen::MatrixXd a(settings.size(), 16);
  const auto& basis = pauli_basis();
  for (std::size_t j = 0; j < settings.size(); ++j) {
    Matrix pj = joint_projector(settings[j]);
    for (int k = 0; k < 16; ++k) a(j, k) = (basis[k] * pj).trace().real();
  }
  return a;
}

DensityMatrix clip_to_physical(const Matrix& m) {
  Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  if (ev.sum() <= 0.0) throw std::runtime_error("linear inversion produced no positive weight");
  ev /= ev.sum();
  Matrix rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  return DensityMatrix::from_unnormalized(rho);
}

std::string format_angle(double radians) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", radians / kDeg);
  return buf;
}

std::string format_count(double c) {
  char buf[40];
  if (c == std::floor(c) && c < 9.0e15) {
    std::snprintf(buf, sizeof buf, "%.0f", c);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", c);
  }
  return buf;
}

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

// ------------------------------------------------------------------- settings

PartySetting PartySetting::normalized() const {
  return {reduce_angle(polarizer_angle), qwp_in, reduce_angle(qwp_angle)};
}

Vector analyzer_state(const PartySetting& setting) {
  Vector v(2);
  v << std::cos(setting.polarizer_angle), std::sin(setting.polarizer_angle);
  if (setting.qwp_in) {
    v = jones({WaveplateKind::kQuarter, setting.qwp_angle}).adjoint() * v;
  }
  return v;
}

Matrix projector(const PartySetting& setting) {
  Vector v = analyzer_state(setting);
  return v * v.adjoint();
}

Matrix projector(const MeasurementSetting& setting, Arm party) {
  return projector(party == Arm::kA ? setting.a : setting.b);
}

Matrix joint_projector(const MeasurementSetting& setting) {
  return kron(projector(setting.a), projector(setting.b));
}

namespace {

struct NamedAnalyzer {
  char name;
  PartySetting setting;
};

const std::array<NamedAnalyzer, 6>& six_states() {
  static const std::array<NamedAnalyzer, 6> states = {{
      {'H', {0.0, false, 0.0}},
      {'V', {90 * kDeg, false, 0.0}},
      {'D', {45 * kDeg, false, 0.0}},
      {'A', {135 * kDeg, false, 0.0}},
      {'R', {45 * kDeg, true, 0.0}},
      {'L', {135 * kDeg, true, 0.0}},
  }};
  return states;
}

}  // namespace

std::vector<MeasurementSetting> standard_settings() {
  std::vector<MeasurementSetting> out;
  out.reserve(36);
  for (const auto& a : six_states()) {
    for (const auto& b : six_states()) out.push_back({a.setting, b.setting});
  }
  return out;
}

std::vector<std::string> standard_setting_names() {
  std::vector<std::string> out;
  out.reserve(36);
  for (const auto& a : six_states()) {
    for (const auto& b : six_states()) out.push_back(std::string{a.name, b.name});
  }
  return out;
}

// ----------------------------------------------------------------- count data

void CountData::validate() const {
  if (settings.size() != counts.size()) {
    throw std::invalid_argument("count data: " + std::to_string(settings.size()) +
                                " settings but " + std::to_string(counts.size()) + " counts");
  }
  if (settings.empty()) throw std::invalid_argument("count data is empty");
  if (!(pairs_per_setting > 0.0)) throw std::invalid_argument("pairs_per_setting must be positive");
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double c = counts[j];
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("count " + std::to_string(j) + " is negative or not finite");
    }
    if (!analytic && c != std::floor(c)) {
      throw std::invalid_argument("count " + std::to_string(j) + " is not an integer");
    }
    if (c > 50.0 * pairs_per_setting) {
      throw std::invalid_argument("count " + std::to_string(j) +
                                  " exceeds 50 x pairs_per_setting");
    }
  }
}

double CountData::total() const {
  double t = 0.0;
  for (double c : counts) t += c;
  return t;
}

CountData expected_counts(const DensityMatrix& rho, const std::vector<MeasurementSetting>& settings,
                          double pairs_per_setting) {
  if (rho.dim() != 4) throw std::invalid_argument("tomography expects a two-qubit state");
  CountData data;
  data.settings = settings;
  data.pairs_per_setting = pairs_per_setting;
  data.analytic = true;
  Mat4 r = rho.data();
  for (const auto& s : settings) {
    data.counts.push_back(pairs_per_setting * std::max(0.0, expectation(joint_ket(s), r)));
  }
  data.validate();
  return data;
}

CountData simulate_counts(const DensityMatrix& rho, const std::vector<MeasurementSetting>& settings,
                          double pairs_per_setting, std::uint64_t seed) {
  CountData data = expected_counts(rho, settings, pairs_per_setting);
  data.analytic = false;
  data.seed = seed;
  const std::uint64_t base = tagged_seed(seed, StreamTag::kCounts);
  for (std::size_t j = 0; j < data.counts.size(); ++j) {
    const double mean = data.counts[j];
    if (mean <= 0.0) {
      data.counts[j] = 0.0;
      continue;
    }
    Rng rng = substream(base, j);
    std::poisson_distribution<long long> poisson(mean);
    data.counts[j] = static_cast<double>(poisson(rng));
  }
  return data;
}

void write_counts_csv(std::ostream& os, const CountData& data) {
  os << "setting_index,theta_a,qwp_a,qwp_theta_a,theta_b,qwp_b,qwp_theta_b,count\n";
  for (std::size_t j = 0; j < data.settings.size(); ++j) {
    const PartySetting a = data.settings[j].a.normalized();
    const PartySetting b = data.settings[j].b.normalized();
    os << j << ',' << format_angle(a.polarizer_angle) << ',' << (a.qwp_in ? 1 : 0) << ','
       << format_angle(a.qwp_angle) << ',' << format_angle(b.polarizer_angle) << ','
       << (b.qwp_in ? 1 : 0) << ',' << format_angle(b.qwp_angle) << ','
       << format_count(data.counts[j]) << '\n';
  }
}

CountData read_counts_csv(std::istream& is, double pairs_per_setting) {
  std::string line;
  if (!std::getline(is, line) ||
      line != "setting_index,theta_a,qwp_a,qwp_theta_a,theta_b,qwp_b,qwp_theta_b,count") {
    throw std::invalid_argument("count CSV: unexpected header");
  }
  CountData data;
  data.pairs_per_setting = pairs_per_setting;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 8) {
      throw std::invalid_argument("count CSV line " + std::to_string(line_no) +
                                  ": expected 8 fields");
    }
    try {
      MeasurementSetting s;
      s.a = {std::stod(fields[1]) * kDeg, fields[2] == "1", std::stod(fields[3]) * kDeg};
      s.b = {std::stod(fields[4]) * kDeg, fields[5] == "1", std::stod(fields[6]) * kDeg};
      const double c = std::stod(fields[7]);
      if (c != std::floor(c)) data.analytic = true;
      data.settings.push_back(s);
      data.counts.push_back(c);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("count CSV line " + std::to_string(line_no) +
                                  ": malformed number");
    }
  }
  data.validate();
  return data;
}

// -------------------------------------------------------------- reconstruction

std::string_view to_string(ReconstructionMethod method) {
  return method == ReconstructionMethod::kLinear ? "linear" : "mle";
}

int settings_rank(const std::vector<MeasurementSetting>& settings) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design_matrix(settings));
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-10 * s(0)) ++rank;
  }
  return rank;
}

double log_likelihood(const CountData& data, const Matrix& rho, double floor) {
  Mat4 r = rho;
  double ll = 0.0;
  for (std::size_t j = 0; j < data.settings.size(); ++j) {
    if (data.counts[j] == 0.0) continue;
    ll += data.counts[j] * std::log(std::max(expectation(joint_ket(data.settings[j]), r), floor));
  }
  return ll;
}

ReconstructionResult linear_inversion(const CountData& data) {
  data.validate();
  Eigen::MatrixXd a = design_matrix(data.settings);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-10 * s(0)) ++rank;
  }
  if (rank < 16) {
    throw std::invalid_argument("measurement settings span only " + std::to_string(rank) +
                                " of 16 operator dimensions");
  }
  Eigen::VectorXd n = Eigen::Map<const Eigen::VectorXd>(data.counts.data(),
                                                        static_cast<Eigen::Index>(data.counts.size()));
  Eigen::VectorXd coeffs = svd.solve(n);
  Matrix m = Matrix::Zero(4, 4);
  const auto& basis = pauli_basis();
  for (int k = 0; k < 16; ++k) m += coeffs(k) * basis[k];
  if (m.trace().real() <= 0.0) throw std::runtime_error("linear inversion: non-positive trace");
  DensityMatrix rho = clip_to_physical(m / m.trace().real());
  const double ll = log_likelihood(data, rho.data());
  return ReconstructionResult{rho, ReconstructionMethod::kLinear, 0, ll, true, 0.0, 0, {}};
}

ReconstructionResult mle_reconstruct(const CountData& data, const MleOptions& options) {
  data.validate();
  if (settings_rank(data.settings) < 16) {
    throw std::invalid_argument("measurement settings do not span the operator space");
  }
  const double total = data.total();
  if (!(total > 0.0)) throw std::invalid_argument("MLE needs at least one count");

  const std::vector<Ket4> kets = joint_kets(data.settings);
  const std::size_t m = kets.size();
  std::vector<Mat4> projectors(m);
  for (std::size_t j = 0; j < m; ++j) projectors[j] = kets[j] * kets[j].adjoint();
  std::vector<double> freq(m);
  for (std::size_t j = 0; j < m; ++j) freq[j] = data.counts[j] / total;
  const double floor = options.probability_floor;

  int floored = 0;
  // Returns the log-likelihood per unit count and fills R.
  auto evaluate = [&](const Mat4& rho, Mat4* r_op) {
    double ll = 0.0;
    int low = 0;
    if (r_op) r_op->setZero();
    for (std::size_t j = 0; j < m; ++j) {
      double p = expectation(kets[j], rho);
      if (p < floor) {
        p = floor;
        if (freq[j] > 0.0) ++low;
      }
      if (freq[j] > 0.0) {
        ll += freq[j] * std::log(p);
        if (r_op) *r_op += (freq[j] / p) * projectors[j];
      }
    }
    floored = low;
    return ll;
  };

  Mat4 rho = Mat4::Identity() / 4.0;
  Mat4 r_op;
  double ll = evaluate(rho, &r_op);
  ReconstructionResult result{DensityMatrix::maximally_mixed(2), ReconstructionMethod::kMle, 0, 0.0,
                              false, floor, 0, {}};
  if (options.record_history) result.loglike_history.push_back(ll * total);

  for (int it = 1; it <= options.max_iter; ++it) {
    Mat4 candidate = normalized(r_op * rho * r_op);
    Mat4 cand_r;
    double cand_ll = evaluate(candidate, &cand_r);
    // Dilute the step until the likelihood does not drop.
    double eps = 1.0;
    while (!(cand_ll >= ll) && eps > 1e-10) {
      eps *= 0.5;
      Mat4 g = Mat4::Identity() + eps * r_op;
      candidate = normalized(g * rho * g);
      cand_ll = evaluate(candidate, &cand_r);
    }
    result.iterations = it;
    if (!(cand_ll >= ll)) {
      // No ascent direction left at working precision.
      result.converged = true;
      break;
    }
    // ||d||_F / 2 <= trace distance <= ||d||_F for 4x4 Hermitian d.
    const double frob = (candidate - rho).norm();
    const double step = (frob <= options.tol || frob > 2 * options.tol)
                            ? frob
                            : trace_distance4(candidate, rho);
    rho = candidate;
    r_op = cand_r;
    ll = cand_ll;
    if (options.record_history) result.loglike_history.push_back(ll * total);
    if (step <= options.tol) {
      result.converged = true;
      break;
    }
  }
  evaluate(rho, nullptr);
  result.rho = DensityMatrix::from_unnormalized(rho);
  result.loglike = log_likelihood(data, result.rho.data(), floor);
  result.floored = floored;
  return result;
}

ReconstructionResult reconstruct(const CountData& data, ReconstructionMethod method) {
  return method == ReconstructionMethod::kLinear ? linear_inversion(data) : mle_reconstruct(data);
}

// ------------------------------------------------------------------- metrics

Matrix linear_pauli(double theta) {
  return std::cos(2 * theta) * gates::pauli_z() + std::sin(2 * theta) * gates::pauli_x();
}

double correlation(const DensityMatrix& rho, double theta_a, double theta_b) {
  if (rho.dim() != 4) throw std::invalid_argument("correlation needs a two-qubit state");
  return (rho.data() * kron(linear_pauli(theta_a), linear_pauli(theta_b))).trace().real();
}

double chsh_value(const DensityMatrix& rho, const ChshAngles& g) {
  return correlation(rho, g.alpha, g.beta) - correlation(rho, g.alpha, g.beta_prime) +
         correlation(rho, g.alpha_prime, g.beta) + correlation(rho, g.alpha_prime, g.beta_prime);
}

PointMetrics state_metrics(const DensityMatrix& rho, const ChshAngles& angles) {
  return {fidelity_to(rho, bell_phi_plus()), concurrence(rho), purity(rho),
          chsh_value(rho, angles)};
}

TomographyResult analyze(const CountData& data, const MonteCarloOptions& options) {
  if (options.n_samples < 10) throw std::invalid_argument("Monte Carlo needs n_samples >= 10");
  data.validate();
  ReconstructionResult original = reconstruct(data, options.method);
  const PointMetrics point = state_metrics(original.rho, options.angles);

  const std::size_t n = static_cast<std::size_t>(options.n_samples);
  std::vector<std::optional<PointMetrics>> samples(n);
  const std::uint64_t base = tagged_seed(options.seed, StreamTag::kMonteCarlo);
  parallel_for(n, options.threads, [&](std::size_t i) {
    if (data.analytic) {
      samples[i] = point;
      return;
    }
    CountData resampled = data;
    Rng rng = substream(base, i);
    for (double& c : resampled.counts) {
      if (c > 0.0) {
        std::poisson_distribution<long long> poisson(c);
        c = static_cast<double>(poisson(rng));
      }
    }
    try {
      samples[i] = state_metrics(reconstruct(resampled, options.method).rho, options.angles);
    } catch (const std::exception&) {
      samples[i].reset();
    }
  });

  std::vector<double> f, c, g, s;
  int dropped = 0;
  for (const auto& smp : samples) {
    if (!smp) {
      ++dropped;
      continue;
    }
    f.push_back(smp->fidelity);
    c.push_back(smp->concurrence);
    g.push_back(smp->purity);
    s.push_back(smp->s_value);
  }
  if (dropped * 10 > options.n_samples) {
    throw std::runtime_error("Monte Carlo: " + std::to_string(dropped) + " of " +
                             std::to_string(options.n_samples) + " resamples failed");
  }
  MetricsReport report;
  report.fidelity = {point.fidelity, sample_stddev(f)};
  report.concurrence = {point.concurrence, sample_stddev(c)};
  report.purity = {point.purity, sample_stddev(g)};
  report.s_value = {point.s_value, sample_stddev(s)};
  report.n_samples = options.n_samples;
  report.dropped = dropped;
  return {std::move(original), report};
}

MetricsReport monte_carlo_metrics(const CountData& data, const MonteCarloOptions& options) {
  return analyze(data, options).metrics;
}

}  // namespace fransim
