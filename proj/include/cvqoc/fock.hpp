#pragma once

// Truncated Fock-basis linear algebra for continuous-variable qumodes.
//
// Multi-mode spaces use little-endian ordering: the basis index of
// |n_0, n_1, ..., n_{k-1}> is n_0 + D*n_1 + D^2*n_2 + ..., so mode 0
// varies fastest.
//
// Quadrature convention: x = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2).
// With this choice a coherent state D(alpha)|0> has <x> = sqrt(2) Re(alpha).

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <variant>

namespace cvqoc::fock {

using Complex = std::complex<double>;

/// Default cutoff used for training.
inline constexpr int kTrainingCutoff = 10;
/// Default cutoff used by verification oracles.
inline constexpr int kVerificationCutoff = 30;

/// Amplitudes of a (possibly multi-mode) state in the truncated number basis.
///
/// Gates are applied without renormalization; whatever norm leaks past the
/// cutoff stays visible through norm_squared().
class FockVector {
 public:
  /// Throws InvalidCutoff / DimensionMismatch / ContractViolation when the
  /// amplitudes are not of length cutoff^modes or have squared norm > 1 + 1e-12.
  FockVector(Eigen::VectorXcd amplitudes, int cutoff, int modes = 1);

  static FockVector vacuum(int cutoff, int modes = 1);
  /// Single-mode number state |n>.
  static FockVector number_state(int n, int cutoff);

  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  int cutoff() const { return cutoff_; }
  int modes() const { return modes_; }
  Eigen::Index dim() const { return amplitudes_.size(); }
  double norm_squared() const { return amplitudes_.squaredNorm(); }

 private:
  Eigen::VectorXcd amplitudes_;
  int cutoff_;
  int modes_;
};

/// Square operator on cutoff^modes dimensional space.
class FockOperator {
 public:
  FockOperator(Eigen::MatrixXcd entries, int cutoff, int modes = 1);

  static FockOperator identity(int cutoff, int modes = 1);

  const Eigen::MatrixXcd& entries() const { return entries_; }
  int cutoff() const { return cutoff_; }
  int modes() const { return modes_; }
  Eigen::Index dim() const { return entries_.rows(); }

  FockOperator adjoint() const;
  bool is_hermitian(double tol = 1e-10) const;

  friend FockOperator operator*(const FockOperator& lhs, const FockOperator& rhs);
  friend FockOperator operator+(const FockOperator& lhs, const FockOperator& rhs);
  friend FockOperator operator*(Complex scale, const FockOperator& op);

 private:
  Eigen::MatrixXcd entries_;
  int cutoff_;
  int modes_;
};

struct Displacement {
  Complex alpha;
};
struct Rotation {
  double phi;
};
struct Squeeze {
  double r;
};
/// Beam splitter on the adjacent pair (mode, mode + 1).
struct BeamSplitter {
  double theta;
  int mode = 0;
};
struct Kerr {
  double kappa;
};

using GateSpec = std::variant<Displacement, Rotation, Squeeze, BeamSplitter, Kerr>;

/// Annihilation and creation operators: a[n-1, n] = sqrt(n).
std::pair<FockOperator, FockOperator> ladder(int cutoff);
FockOperator number_operator(int cutoff);
FockOperator quadrature_x(int cutoff);
FockOperator quadrature_p(int cutoff);

/// Matrix of a gate. Single-mode gates return a cutoff x cutoff operator;
/// BeamSplitter returns the two-mode operator on cutoff^2 (mode 0 of the
/// result is spec.mode, mode 1 is spec.mode + 1).
///
/// Rotation and Kerr are built as exact diagonals. Displacement, Squeeze and
/// BeamSplitter are matrix exponentials of the truncated generators
/// alpha a^dag - alpha^* a, (r/2)(a^2 - a^dag^2) and theta(a1^dag a2 - a1 a2^dag).
FockOperator gate_matrix(const GateSpec& spec, int cutoff);

/// op * state, no renormalization.
FockVector apply(const FockOperator& op, const FockVector& state);

/// Re <state|op|state>; op must be Hermitian within 1e-10.
double expectation(const FockOperator& op, const FockVector& state);

/// Kronecker embedding of a single-mode (or two-mode, acting on
/// (mode, mode + 1)) operator into an n_modes space.
FockOperator tensor_embed(const FockOperator& op, int mode, int n_modes, int cutoff);

/// Kronecker product with Eigen's index convention (rhs index varies fastest).
Eigen::MatrixXcd kron(const Eigen::MatrixXcd& lhs, const Eigen::MatrixXcd& rhs);

/// Pade [13/13] scaling-and-squaring exponential of a dense complex matrix.
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a);

}  // namespace cvqoc::fock
