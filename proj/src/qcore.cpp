#include "fransim/qcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fransim/error.hpp"
#include "fransim/random.hpp"

namespace fransim {

namespace {

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

int qubit_count(Eigen::Index dim) { return std::countr_zero(static_cast<unsigned>(dim)); }

// Bit of qubit `k` (most significant first) in an index over `n` qubits.
int bit_of(int index, int k, int n) { return (index >> (n - 1 - k)) & 1; }

// Packs the bits of `index` at positions `qubits` into a small index,
// first listed qubit most significant.
int gather(int index, const std::vector<int>& qubits, int n) {
  int out = 0;
  for (int q : qubits) out = (out << 1) | bit_of(index, q, n);
  return out;
}

std::vector<int> resolve(const SubsystemLayout& layout,
                         std::span<const std::string_view> names) {
  std::vector<int> idx;
  idx.reserve(names.size());
  for (auto name : names) {
    int k = layout.index_of(name);
    if (std::find(idx.begin(), idx.end(), k) != idx.end()) {
      throw std::invalid_argument("duplicate subsystem label: " + std::string(name));
    }
    idx.push_back(k);
  }
  return idx;
}

std::vector<int> complement(const std::vector<int>& picked, int n) {
  std::vector<int> rest;
  for (int k = 0; k < n; ++k) {
    if (std::find(picked.begin(), picked.end(), k) == picked.end()) rest.push_back(k);
  }
  return rest;
}

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

void check_layout(const DensityMatrix& rho, const SubsystemLayout& layout) {
  if (rho.dim() != layout.dim()) {
    throw std::invalid_argument("state dimension " + std::to_string(rho.dim()) +
                                " does not match layout dimension " +
                                std::to_string(layout.dim()));
  }
}

}  // namespace

// ---------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(Matrix data, double weight)
    : data_(std::move(data)), weight_(weight) {
  if (data_.rows() != data_.cols() || !is_power_of_two(data_.rows())) {
    throw std::invalid_argument("density matrix must be square with power-of-two dimension");
  }
  if (qubit_count(data_.rows()) > kMaxQubits) {
    throw std::invalid_argument("density matrix exceeds " + std::to_string(kMaxQubits) +
                                " qubits");
  }
  if (!(weight_ >= 0.0 && weight_ <= 1.0 + kTraceTol)) {
    throw std::invalid_argument("weight must lie in [0, 1], got " + std::to_string(weight_));
  }
  double herm = (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    throw std::invalid_argument("density matrix is not Hermitian (residual " +
                                std::to_string(herm) + ")");
  }
  Complex tr = data_.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw std::invalid_argument("density matrix trace deviates from 1 by " +
                                std::to_string(std::abs(tr - 1.0)));
  }
  double min_eig = hermitian_eigenvalues(data_).minCoeff();
  if (min_eig < -kPsdTol) {
    throw std::invalid_argument("density matrix is not positive semidefinite (min eigenvalue " +
                                std::to_string(min_eig) + ")");
  }
}

DensityMatrix DensityMatrix::from_pure(const Vector& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("pure state is not normalized");
  }
  return DensityMatrix(hermitize(psi * psi.adjoint()));
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  int dim = 1 << n_qubits;
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::basis_state(int dim, int index) {
  if (index < 0 || index >= dim) throw std::out_of_range("basis index out of range");
  Matrix m = Matrix::Zero(dim, dim);
  m(index, index) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::from_unnormalized(const Matrix& data, double weight) {
  Matrix h = hermitize(data);
  double tr = h.trace().real();
  if (tr < kEmptyTraceTol) {
    throw EmptyPostselection("state has vanishing trace " + std::to_string(tr));
  }
  return DensityMatrix(h / tr, weight);
}

int DensityMatrix::n_qubits() const noexcept { return qubit_count(data_.rows()); }

DensityMatrix DensityMatrix::with_weight(double weight) const {
  return DensityMatrix(data_, weight);
}

// -------------------------------------------------------------- SubsystemLayout

SubsystemLayout::SubsystemLayout(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty() || static_cast<int>(labels_.size()) > kMaxQubits) {
    throw std::invalid_argument("layout must have between 1 and 6 qubits");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    for (std::size_t j = i + 1; j < labels_.size(); ++j) {
      if (labels_[i] == labels_[j]) throw std::invalid_argument("duplicate label " + labels_[i]);
    }
  }
}

const SubsystemLayout& SubsystemLayout::photon_pair() {
  static const SubsystemLayout layout({std::string(labels::kPolA), std::string(labels::kEtA),
                                       std::string(labels::kPolB), std::string(labels::kEtB)});
  return layout;
}

int SubsystemLayout::index_of(std::string_view label) const {
  for (int k = 0; k < size(); ++k) {
    if (labels_[k] == label) return k;
  }
  throw std::invalid_argument("unknown subsystem label: " + std::string(label));
}

// --------------------------------------------------------------- QuantumChannel

QuantumChannel::QuantumChannel(std::vector<Matrix> kraus, bool trace_preserving)
    : kraus_(std::move(kraus)), trace_preserving_(trace_preserving) {
  if (kraus_.empty()) throw std::invalid_argument("channel needs at least one Kraus operator");
  const auto dim = kraus_.front().rows();
  Matrix sum = Matrix::Zero(dim, dim);
  for (const auto& k : kraus_) {
    if (k.rows() != dim || k.cols() != dim) {
      throw std::invalid_argument("Kraus operators must share one square dimension");
    }
    sum += k.adjoint() * k;
  }
  Matrix id = Matrix::Identity(dim, dim);
  if (trace_preserving_) {
    double res = (sum - id).cwiseAbs().maxCoeff();
    if (res > 1e-12) {
      throw std::invalid_argument("Kraus completeness violated (residual " +
                                  std::to_string(res) + ")");
    }
  } else if (hermitian_eigenvalues(hermitize(sum)).maxCoeff() > 1.0 + 1e-12) {
    throw std::invalid_argument("channel is trace-increasing");
  }
}

// ------------------------------------------------------------------ operations

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.n_qubits() + b.n_qubits() > kMaxQubits) {
    throw std::invalid_argument("tensor product exceeds " + std::to_string(kMaxQubits) +
                                " qubits");
  }
  return DensityMatrix(kron(a.data(), b.data()), a.weight() * b.weight());
}

DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemLayout& layout,
                            std::span<const std::string_view> keep) {
  check_layout(rho, layout);
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  std::vector<int> kept = resolve(layout, keep);
  std::sort(kept.begin(), kept.end());  // reduced state follows layout order
  const int n = layout.size();
  std::vector<int> traced = complement(kept, n);
  const int kd = 1 << kept.size();
  Matrix out = Matrix::Zero(kd, kd);
  for (int i = 0; i < rho.dim(); ++i) {
    const int ti = gather(i, traced, n);
    const int ki = gather(i, kept, n);
    for (int j = 0; j < rho.dim(); ++j) {
      if (gather(j, traced, n) != ti) continue;
      out(ki, gather(j, kept, n)) += rho(i, j);
    }
  }
  return DensityMatrix::from_unnormalized(out, rho.weight());
}

DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemLayout& layout,
                            std::initializer_list<std::string_view> keep) {
  return partial_trace(rho, layout, std::span<const std::string_view>(keep.begin(), keep.size()));
}

Matrix embed(const Matrix& op, std::span<const std::string_view> targets,
             const SubsystemLayout& layout) {
  std::vector<int> tq = resolve(layout, targets);
  if (op.rows() != (1 << tq.size()) || op.cols() != op.rows()) {
    throw std::invalid_argument("operator dimension does not match target count");
  }
  const int n = layout.size();
  std::vector<int> rest = complement(tq, n);
  const int dim = layout.dim();
  Matrix full = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const int ri = gather(i, rest, n);
    const int ti = gather(i, tq, n);
    for (int j = 0; j < dim; ++j) {
      if (gather(j, rest, n) != ri) continue;
      full(i, j) = op(ti, gather(j, tq, n));
    }
  }
  return full;
}

double unitarity_residual(const Matrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  return (u * u.adjoint() - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& u,
                            std::span<const std::string_view> targets,
                            const SubsystemLayout& layout) {
  check_layout(rho, layout);
  double res = unitarity_residual(u);
  if (res > kUnitaryTol) {
    throw std::invalid_argument("operator is not unitary (residual " + std::to_string(res) + ")");
  }
  Matrix full = embed(u, targets, layout);
  return DensityMatrix::from_unnormalized(full * rho.data() * full.adjoint(), rho.weight());
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& u,
                            std::initializer_list<std::string_view> targets,
                            const SubsystemLayout& layout) {
  return apply_unitary(rho, u, std::span<const std::string_view>(targets.begin(), targets.size()),
                       layout);
}

DensityMatrix apply_channel(const DensityMatrix& rho, const QuantumChannel& ch,
                            std::span<const std::string_view> targets,
                            const SubsystemLayout& layout) {
  check_layout(rho, layout);
  Matrix out = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& k : ch.kraus()) {
    Matrix full = embed(k, targets, layout);
    out += full * rho.data() * full.adjoint();
  }
  out = hermitize(out);
  const double tr = out.trace().real();
  if (tr < kEmptyTraceTol) {
    throw EmptyPostselection("channel output has trace " + std::to_string(tr) +
                             "; nothing survives postselection");
  }
  const double weight = ch.trace_preserving() ? rho.weight() : rho.weight() * tr;
  return DensityMatrix(out / tr, weight);
}

DensityMatrix apply_channel(const DensityMatrix& rho, const QuantumChannel& ch,
                            std::initializer_list<std::string_view> targets,
                            const SubsystemLayout& layout) {
  return apply_channel(rho, ch, std::span<const std::string_view>(targets.begin(), targets.size()),
                       layout);
}

Matrix permute_qubits(const Matrix& m, std::span<const int> order) {
  const int n = qubit_count(m.rows());
  if (static_cast<int>(order.size()) != n || m.rows() != m.cols()) {
    throw std::invalid_argument("permute_qubits: order does not match matrix");
  }
  std::vector<int> src(order.begin(), order.end());
  std::vector<int> sorted = src;
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < n; ++k) {
    if (sorted[k] != k) throw std::invalid_argument("permute_qubits: not a permutation");
  }
  const int dim = static_cast<int>(m.rows());
  // new index bits (b_0..b_{n-1}) map to old index with bit order[k] = b_k
  std::vector<int> to_old(dim);
  for (int i = 0; i < dim; ++i) {
    int old = 0;
    for (int k = 0; k < n; ++k) old |= bit_of(i, k, n) << (n - 1 - src[k]);
    to_old[i] = old;
  }
  Matrix out(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) out(i, j) = m(to_old[i], to_old[j]);
  }
  return out;
}

Eigen::VectorXd hermitian_eigenvalues(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double concurrence(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("concurrence needs a two-qubit state");
  // rho = W W^dag. The square roots of the eigenvalues of rho * (Y rho^* Y)
  // are the singular values of W^T Y W (Y = sigma_y (x) sigma_y), which avoids
  // taking square roots of rounding noise.
  Eigen::SelfAdjointEigenSolver<Matrix> solver(rho.data());
  Eigen::VectorXd evals = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix w = solver.eigenvectors() * evals.asDiagonal();
  Matrix yy = Matrix::Zero(4, 4);
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  Matrix tau = w.transpose() * yy * w;
  Eigen::JacobiSVD<Matrix> svd(tau);
  Eigen::VectorXd s = svd.singularValues();  // descending
  return std::clamp(s(0) - s(1) - s(2) - s(3), 0.0, 1.0);
}

double fidelity_to(const DensityMatrix& rho, const Vector& psi) {
  if (psi.size() != rho.dim()) throw std::invalid_argument("fidelity_to: dimension mismatch");
  if (std::abs(psi.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("fidelity_to: reference state is not normalized");
  }
  return std::clamp((psi.adjoint() * rho.data() * psi)(0, 0).real(), 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
  return rho.data().cwiseAbs2().sum();
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("trace_distance: dimension mismatch");
  }
  return 0.5 * hermitian_eigenvalues(hermitize(a - b)).cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.data(), b.data());
}

Vector bell_phi(double phase) {
  Vector v = Vector::Zero(4);
  v(0) = std::numbers::sqrt2 / 2.0;
  v(3) = std::polar(std::numbers::sqrt2 / 2.0, phase);
  return v;
}

Vector bell_phi_plus() { return bell_phi(0.0); }

namespace {

Vector random_ket(int dim, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

}  // namespace

DensityMatrix random_state(int n_qubits, StateKind kind, std::uint64_t seed) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) throw std::invalid_argument("bad qubit count");
  Rng rng(derive_seed(tagged_seed(seed, StreamTag::kRandomState), n_qubits));
  const int dim = 1 << n_qubits;
  if (kind == StateKind::kPure) return DensityMatrix::from_pure(random_ket(dim, rng));
  std::exponential_distribution<double> expo(1.0);
  Matrix m = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    Vector v = random_ket(dim, rng);
    m += expo(rng) * (v * v.adjoint());
  }
  return DensityMatrix::from_unnormalized(m);
}

Matrix random_unitary(int n_qubits, std::uint64_t seed) {
  Rng rng(derive_seed(tagged_seed(seed, StreamTag::kRandomState), 100 + n_qubits));
  std::normal_distribution<double> normal;
  const int dim = 1 << n_qubits;
  Matrix z(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) z(i, j) = Complex(normal(rng), normal(rng)) / std::sqrt(2.0);
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    Complex d = r(j, j);
    q.col(j) *= d / std::abs(d);
  }
  return q;
}

// ------------------------------------------------------------------------ gates

namespace gates {

Matrix identity(int n_qubits) { return Matrix::Identity(1 << n_qubits, 1 << n_qubits); }

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0.0, Complex(0, -1), Complex(0, 1), 0.0;
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Matrix hadamard() {
  Matrix m(2, 2);
  m << 1.0, 1.0, 1.0, -1.0;
  return m / std::numbers::sqrt2;
}

Matrix phase(double phi) {
  Matrix m = Matrix::Identity(2, 2);
  m(1, 1) = std::polar(1.0, phi);
  return m;
}

Matrix cnot() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

Matrix cnot_reversed() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(2, 2) = m(1, 3) = m(3, 1) = 1.0;
  return m;
}

}  // namespace gates

// ------------------------------------------------------------------ dump format

std::string format_complex(Complex z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gj", z.real(), z.imag());
  return buf;
}

Complex parse_complex(std::string_view token) {
  if (token.empty() || token.back() != 'j') {
    throw std::invalid_argument("malformed complex entry: " + std::string(token));
  }
  std::string_view body = token.substr(0, token.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t i = 1; i < body.size(); ++i) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
    }
  }
  if (split == std::string_view::npos) {
    throw std::invalid_argument("malformed complex entry: " + std::string(token));
  }
  try {
    std::size_t used_re = 0;
    std::size_t used_im = 0;
    std::string re_s(body.substr(0, split));
    std::string im_s(body.substr(split));
    double re = std::stod(re_s, &used_re);
    double im = std::stod(im_s, &used_im);
    if (used_re != re_s.size() || used_im != im_s.size()) throw std::invalid_argument("trailing");
    return {re, im};
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed complex entry: " + std::string(token));
  }
}

void write_dump(std::ostream& os, const Matrix& m) {
  os << "dim " << m.rows() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_complex(m(i, j));
    }
    os << '\n';
  }
}

Matrix read_dump(std::istream& is) {
  std::string word;
  long dim = 0;
  if (!(is >> word >> dim) || word != "dim" || dim <= 0) {
    throw std::invalid_argument("dump must start with 'dim N'");
  }
  Matrix m(dim, dim);
  for (long i = 0; i < dim; ++i) {
    for (long j = 0; j < dim; ++j) {
      std::string tok;
      if (!(is >> tok)) throw std::invalid_argument("dump truncated");
      m(i, j) = parse_complex(tok);
    }
  }
  return m;
}

}  // namespace fransim
