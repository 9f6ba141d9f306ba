#include "cvqoc/fock.hpp"

#include "cvqoc/errors.hpp"

#include <cmath>
#include <string>

namespace cvqoc::fock {

namespace {

Eigen::Index power_dim(int cutoff, int modes) {
  Eigen::Index dim = 1;
  for (int m = 0; m < modes; ++m) {
    dim *= cutoff;
  }
  return dim;
}

void check_cutoff(int cutoff) {
  if (cutoff < 2) {
    throw InvalidCutoff("cutoff must be >= 2, got " + std::to_string(cutoff));
  }
}

void check_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw InvalidParameter(std::string("gate parameter ") + name + " is not finite");
  }
}

Eigen::MatrixXcd annihilation(int cutoff) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) {
    a(n - 1, n) = std::sqrt(static_cast<double>(n));
  }
  return a;
}

}  // namespace

FockVector::FockVector(Eigen::VectorXcd amplitudes, int cutoff, int modes)
    : amplitudes_(std::move(amplitudes)), cutoff_(cutoff), modes_(modes) {
  check_cutoff(cutoff);
  if (modes < 1) {
    throw InvalidParameter("FockVector: modes must be >= 1");
  }
  if (amplitudes_.size() != power_dim(cutoff, modes)) {
    throw DimensionMismatch("FockVector: length " + std::to_string(amplitudes_.size()) +
                            " does not match cutoff^modes");
  }
  if (!(amplitudes_.squaredNorm() <= 1.0 + 1e-12)) {
    throw ContractViolation("FockVector: squared norm exceeds 1");
  }
}

FockVector FockVector::vacuum(int cutoff, int modes) {
  check_cutoff(cutoff);
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(power_dim(cutoff, modes));
  amps(0) = 1.0;
  return FockVector(std::move(amps), cutoff, modes);
}

FockVector FockVector::number_state(int n, int cutoff) {
  check_cutoff(cutoff);
  if (n < 0 || n >= cutoff) {
    throw InvalidParameter("number_state: photon number outside cutoff");
  }
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(cutoff);
  amps(n) = 1.0;
  return FockVector(std::move(amps), cutoff, 1);
}

FockOperator::FockOperator(Eigen::MatrixXcd entries, int cutoff, int modes)
    : entries_(std::move(entries)), cutoff_(cutoff), modes_(modes) {
  check_cutoff(cutoff);
  if (modes < 1) {
    throw InvalidParameter("FockOperator: modes must be >= 1");
  }
  const Eigen::Index dim = power_dim(cutoff, modes);
  if (entries_.rows() != dim || entries_.cols() != dim) {
    throw DimensionMismatch("FockOperator: matrix is not cutoff^modes square");
  }
}

FockOperator FockOperator::identity(int cutoff, int modes) {
  check_cutoff(cutoff);
  const Eigen::Index dim = power_dim(cutoff, modes);
  return FockOperator(Eigen::MatrixXcd::Identity(dim, dim), cutoff, modes);
}

FockOperator FockOperator::adjoint() const {
  return FockOperator(entries_.adjoint(), cutoff_, modes_);
}

bool FockOperator::is_hermitian(double tol) const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

FockOperator operator*(const FockOperator& lhs, const FockOperator& rhs) {
  if (lhs.cutoff_ != rhs.cutoff_ || lhs.modes_ != rhs.modes_) {
    throw DimensionMismatch("FockOperator product: spaces differ");
  }
  return FockOperator(lhs.entries_ * rhs.entries_, lhs.cutoff_, lhs.modes_);
}

FockOperator operator+(const FockOperator& lhs, const FockOperator& rhs) {
  if (lhs.cutoff_ != rhs.cutoff_ || lhs.modes_ != rhs.modes_) {
    throw DimensionMismatch("FockOperator sum: spaces differ");
  }
  return FockOperator(lhs.entries_ + rhs.entries_, lhs.cutoff_, lhs.modes_);
}

FockOperator operator*(Complex scale, const FockOperator& op) {
  return FockOperator(scale * op.entries_, op.cutoff_, op.modes_);
}

std::pair<FockOperator, FockOperator> ladder(int cutoff) {
  check_cutoff(cutoff);
  Eigen::MatrixXcd a = annihilation(cutoff);
  Eigen::MatrixXcd a_dag = a.adjoint();
  return {FockOperator(std::move(a), cutoff), FockOperator(std::move(a_dag), cutoff)};
}

FockOperator number_operator(int cutoff) {
  check_cutoff(cutoff);
  Eigen::VectorXcd diag(cutoff);
  for (int n = 0; n < cutoff; ++n) {
    diag(n) = static_cast<double>(n);
  }
  return FockOperator(diag.asDiagonal(), cutoff);
}

FockOperator quadrature_x(int cutoff) {
  check_cutoff(cutoff);
  const Eigen::MatrixXcd a = annihilation(cutoff);
  return FockOperator((a + a.adjoint()) / std::sqrt(2.0), cutoff);
}

FockOperator quadrature_p(int cutoff) {
  check_cutoff(cutoff);
  const Eigen::MatrixXcd a = annihilation(cutoff);
  return FockOperator(Complex(0.0, 1.0) * (a.adjoint() - a) / std::sqrt(2.0), cutoff);
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& lhs, const Eigen::MatrixXcd& rhs) {
  Eigen::MatrixXcd out(lhs.rows() * rhs.rows(), lhs.cols() * rhs.cols());
  for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
    for (Eigen::Index j = 0; j < lhs.cols(); ++j) {
      out.block(i * rhs.rows(), j * rhs.cols(), rhs.rows(), rhs.cols()) = lhs(i, j) * rhs;
    }
  }
  return out;
}

FockOperator gate_matrix(const GateSpec& spec, int cutoff) {
  check_cutoff(cutoff);
  const Eigen::MatrixXcd a = annihilation(cutoff);
  const Eigen::MatrixXcd a_dag = a.adjoint();

  struct Builder {
    int cutoff;
    const Eigen::MatrixXcd& a;
    const Eigen::MatrixXcd& a_dag;

    FockOperator operator()(const Displacement& g) const {
      check_finite(g.alpha.real(), "alpha");
      check_finite(g.alpha.imag(), "alpha");
      return FockOperator(expm(g.alpha * a_dag - std::conj(g.alpha) * a), cutoff);
    }
    FockOperator operator()(const Rotation& g) const {
      check_finite(g.phi, "phi");
      Eigen::VectorXcd diag(cutoff);
      for (int n = 0; n < cutoff; ++n) {
        diag(n) = std::polar(1.0, g.phi * n);
      }
      return FockOperator(diag.asDiagonal(), cutoff);
    }
    FockOperator operator()(const Squeeze& g) const {
      check_finite(g.r, "r");
      return FockOperator(expm(0.5 * g.r * (a * a - a_dag * a_dag)), cutoff);
    }
    FockOperator operator()(const BeamSplitter& g) const {
      check_finite(g.theta, "theta");
      if (g.mode < 0) {
        throw InvalidParameter("beam splitter mode index must be non-negative");
      }
      const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(cutoff, cutoff);
      // Two-mode space: mode 0 fastest, so mode-0 operators sit on the right.
      const Eigen::MatrixXcd a1 = kron(eye, a);
      const Eigen::MatrixXcd a2 = kron(a, eye);
      const Eigen::MatrixXcd generator =
          g.theta * (a1.adjoint() * a2 - a1 * a2.adjoint());
      return FockOperator(expm(generator), cutoff, 2);
    }
    FockOperator operator()(const Kerr& g) const {
      check_finite(g.kappa, "kappa");
      Eigen::VectorXcd diag(cutoff);
      for (int n = 0; n < cutoff; ++n) {
        diag(n) = std::polar(1.0, g.kappa * static_cast<double>(n) * n);
      }
      return FockOperator(diag.asDiagonal(), cutoff);
    }
  };

  return std::visit(Builder{cutoff, a, a_dag}, spec);
}

FockVector apply(const FockOperator& op, const FockVector& state) {
  if (op.cutoff() != state.cutoff() || op.modes() != state.modes()) {
    throw DimensionMismatch("apply: operator and state live on different spaces");
  }
  return FockVector(op.entries() * state.amplitudes(), state.cutoff(), state.modes());
}

double expectation(const FockOperator& op, const FockVector& state) {
  if (op.cutoff() != state.cutoff() || op.modes() != state.modes()) {
    throw DimensionMismatch("expectation: operator and state live on different spaces");
  }
  if (!op.is_hermitian(1e-10)) {
    throw ContractViolation("expectation: operator is not Hermitian");
  }
  const Complex value = state.amplitudes().dot(op.entries() * state.amplitudes());
  return value.real();
}

FockOperator tensor_embed(const FockOperator& op, int mode, int n_modes, int cutoff) {
  if (op.cutoff() != cutoff) {
    throw DimensionMismatch("tensor_embed: operator cutoff differs");
  }
  if (n_modes < 1 || mode < 0 || mode + op.modes() > n_modes) {
    throw InvalidParameter("tensor_embed: mode index out of range");
  }
  const Eigen::Index below = power_dim(cutoff, mode);
  const Eigen::Index above = power_dim(cutoff, n_modes - mode - op.modes());
  Eigen::MatrixXcd out = op.entries();
  if (below > 1) {
    out = kron(out, Eigen::MatrixXcd::Identity(below, below));
  }
  if (above > 1) {
    out = kron(Eigen::MatrixXcd::Identity(above, above), out);
  }
  return FockOperator(std::move(out), cutoff, n_modes);
}

}  // namespace cvqoc::fock
