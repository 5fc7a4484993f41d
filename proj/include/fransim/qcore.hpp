#pragma once

// Dense density-matrix primitives for a handful of qubits.
//
// Conventions used throughout the library:
//   * tensor factor k of a SubsystemLayout is the k-th most significant bit
//     of the basis index;
//   * polarization basis {H = 0, V = 1}, energy-time / path basis {S = 0, L = 1};
//   * the canonical photon-pair layout is (pol_A, et_A, pol_B, et_B).

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fransim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-12;
inline constexpr double kEmptyTraceTol = 1e-14;
inline constexpr int kMaxQubits = 6;

inline constexpr int kH = 0;
inline constexpr int kV = 1;
inline constexpr int kS = 0;
inline constexpr int kL = 1;

/// Normalized density matrix plus the probability mass that survived any
/// postselection applied so far.
class DensityMatrix {
 public:
  /// Validates hermiticity, positivity, unit trace and dimension.
  explicit DensityMatrix(Matrix data, double weight = 1.0);

  static DensityMatrix from_pure(const Vector& psi);
  static DensityMatrix maximally_mixed(int n_qubits);
  /// |index><index| in a dim-dimensional space.
  static DensityMatrix basis_state(int dim, int index);

  /// Hermitizes and renormalizes `data` before validating. Use for results of
  /// numerical pipelines that are physical up to rounding.
  static DensityMatrix from_unnormalized(const Matrix& data, double weight = 1.0);

  int dim() const noexcept { return static_cast<int>(data_.rows()); }
  int n_qubits() const noexcept;
  const Matrix& data() const noexcept { return data_; }
  double weight() const noexcept { return weight_; }
  Complex operator()(int r, int c) const { return data_(r, c); }

  DensityMatrix with_weight(double weight) const;

 private:
  Matrix data_;
  double weight_;
};

/// Ordered qubit labels of a composite system.
class SubsystemLayout {
 public:
  explicit SubsystemLayout(std::vector<std::string> labels);

  /// (pol_A, et_A, pol_B, et_B)
  static const SubsystemLayout& photon_pair();

  int size() const noexcept { return static_cast<int>(labels_.size()); }
  int dim() const noexcept { return 1 << size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  /// Throws std::invalid_argument for an unknown label.
  int index_of(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
};

namespace labels {
inline constexpr std::string_view kPolA = "pol_A";
inline constexpr std::string_view kEtA = "et_A";
inline constexpr std::string_view kPolB = "pol_B";
inline constexpr std::string_view kEtB = "et_B";
}  // namespace labels

/// Completely positive map given by Kraus operators. Non-trace-preserving
/// channels model postselection.
class QuantumChannel {
 public:
  QuantumChannel(std::vector<Matrix> kraus, bool trace_preserving);

  const std::vector<Matrix>& kraus() const noexcept { return kraus_; }
  bool trace_preserving() const noexcept { return trace_preserving_; }
  int dim() const noexcept { return static_cast<int>(kraus_.front().rows()); }

 private:
  std::vector<Matrix> kraus_;
  bool trace_preserving_;
};

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
Matrix kron(const Matrix& a, const Matrix& b);

DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemLayout& layout,
                            std::span<const std::string_view> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemLayout& layout,
                            std::initializer_list<std::string_view> keep);

/// Lifts `op` (acting on `targets`, first target most significant) to the
/// full layout, identity elsewhere.
Matrix embed(const Matrix& op, std::span<const std::string_view> targets,
             const SubsystemLayout& layout);

/// Largest |U U^dag - I| entry.
double unitarity_residual(const Matrix& u);

DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& u,
                            std::span<const std::string_view> targets,
                            const SubsystemLayout& layout);
DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& u,
                            std::initializer_list<std::string_view> targets,
                            const SubsystemLayout& layout);

/// Sum_k K rho K^dag, renormalized; weight is multiplied by the trace before
/// renormalization. Throws EmptyPostselection when that trace is below 1e-14.
DensityMatrix apply_channel(const DensityMatrix& rho, const QuantumChannel& ch,
                            std::span<const std::string_view> targets,
                            const SubsystemLayout& layout);
DensityMatrix apply_channel(const DensityMatrix& rho, const QuantumChannel& ch,
                            std::initializer_list<std::string_view> targets,
                            const SubsystemLayout& layout);

/// Reorders tensor factors: qubit k of the result is qubit order[k] of `m`.
Matrix permute_qubits(const Matrix& m, std::span<const int> order);

/// Eigenvalues of a Hermitian matrix, ascending.
Eigen::VectorXd hermitian_eigenvalues(const Matrix& h);

/// Wootters concurrence of a two-qubit state.
double concurrence(const DensityMatrix& rho);
double fidelity_to(const DensityMatrix& rho, const Vector& psi);
double purity(const DensityMatrix& rho);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double trace_distance(const Matrix& a, const Matrix& b);

Vector bell_phi_plus();
/// (|00> + e^{i phase}|11>) / sqrt(2)
Vector bell_phi(double phase);

enum class StateKind { kPure, kMixed };

/// Haar-random pure state, or a random convex mixture of 2^n Haar states.
DensityMatrix random_state(int n_qubits, StateKind kind, std::uint64_t seed);
/// Haar-random unitary on 2^n dimensions.
Matrix random_unitary(int n_qubits, std::uint64_t seed);

namespace gates {
Matrix identity(int n_qubits);
Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix hadamard();
/// diag(1, e^{i phase})
Matrix phase(double phase);
/// Two-qubit CNOT, first qubit controls.
Matrix cnot();
/// Two-qubit CNOT, second qubit controls the first.
Matrix cnot_reversed();
}  // namespace gates

// Text dump: "dim N" then N rows of "re+imj" entries, 17 significant digits.
void write_dump(std::ostream& os, const Matrix& m);
Matrix read_dump(std::istream& is);
std::string format_complex(Complex z);
Complex parse_complex(std::string_view token);

}  // namespace fransim
