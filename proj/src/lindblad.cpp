#include "cvqoc/lindblad.hpp"

#include "cvqoc/errors.hpp"

#include <cmath>
#include <string>

namespace cvqoc::lindblad {

namespace {

const Complex kI(0.0, 1.0);

// Coordinates of the (i, j) coherence pair, i < j.
Eigen::Index coherence_index(int d, int i, int j) {
  Eigen::Index idx = d;
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      if (a == i && b == j) {
        return idx;
      }
      idx += 2;
    }
  }
  return -1;
}

Eigen::MatrixXcd sigma(int d, int a, int b) {
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d, d);
  s(a, b) = 1.0;
  return s;
}

std::vector<Eigen::Index> first_rows(int d) {
  std::vector<Eigen::Index> rows;
  for (int i = 0; i < d; ++i) {
    rows.push_back(i);
  }
  return rows;
}

}  // namespace

void TwoLevelParams::validate() const {
  if (!(gamma_eg >= 0.0) || !(gamma_ge >= 0.0)) {
    throw InvalidParameter("TwoLevelParams: damping rates must be non-negative");
  }
  if (!std::isfinite(gamma_eg) || !std::isfinite(gamma_ge) || !std::isfinite(omega_x) ||
      !std::isfinite(omega_z)) {
    throw InvalidParameter("TwoLevelParams: non-finite parameter");
  }
}

void ThreeLevelParams::validate() const {
  if (!std::isfinite(delta) || !std::isfinite(delta1)) {
    throw InvalidParameter("ThreeLevelParams: non-finite parameter");
  }
}

int levels_for_dim(Eigen::Index dim) {
  const auto d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (d < 1 || static_cast<Eigen::Index>(d) * d != dim) {
    throw DimensionMismatch("real density vector length " + std::to_string(dim) +
                            " is not a perfect square");
  }
  return d;
}

Eigen::VectorXd to_real_vector(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols()) {
    throw DimensionMismatch("to_real_vector: density matrix not square");
  }
  const auto d = static_cast<int>(rho.rows());
  Eigen::VectorXd x(static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i) {
    x(i) = rho(i, i).real();
  }
  Eigen::Index idx = d;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      x(idx++) = rho(i, j).real();
      x(idx++) = rho(i, j).imag();
    }
  }
  return x;
}

Eigen::MatrixXcd to_density(const Eigen::VectorXd& x) {
  const int d = levels_for_dim(x.size());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    rho(i, i) = x(i);
  }
  Eigen::Index idx = d;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const Complex c(x(idx), x(idx + 1));
      idx += 2;
      rho(i, j) = c;
      rho(j, i) = std::conj(c);
    }
  }
  return rho;
}

double trace(const Eigen::VectorXd& x) {
  const int d = levels_for_dim(x.size());
  return x.head(d).sum();
}

Eigen::Matrix4d two_level_generator(const TwoLevelParams& p, double u) {
  p.validate();
  if (!std::isfinite(u)) {
    throw InvalidParameter("two_level_generator: non-finite control");
  }
  const double dephase = -(p.gamma_ge + p.gamma_eg) / 2.0;
  const double detuning = 2.0 * p.omega_z + u;
  Eigen::Matrix4d m;
  // clang-format off
  m << -p.gamma_eg,  p.gamma_ge, 0.0,       -2.0 * p.omega_x,
        p.gamma_eg, -p.gamma_ge, 0.0,        2.0 * p.omega_x,
        0.0,         0.0,        dephase,   -detuning,
        p.omega_x,  -p.omega_x,  detuning,   dephase;
  // clang-format on
  return m;
}

Eigen::Matrix4d two_level_generator_du(const TwoLevelParams& /*p*/) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(2, 3) = -1.0;
  m(3, 2) = 1.0;
  return m;
}

Eigen::MatrixXcd two_level_hamiltonian(const TwoLevelParams& p, double u) {
  constexpr int g = 0;
  constexpr int e = 1;
  return p.omega_x * (sigma(2, e, g) + sigma(2, g, e)) +
         p.omega_z * (sigma(2, e, e) - sigma(2, g, g)) + Complex(u) * sigma(2, e, e);
}

std::vector<JumpOperator> two_level_jumps(const TwoLevelParams& p) {
  constexpr int g = 0;
  constexpr int e = 1;
  return {{sigma(2, e, g), p.gamma_eg}, {sigma(2, g, e), p.gamma_ge}};
}

Eigen::MatrixXcd three_level_hamiltonian(const ThreeLevelParams& p, double u_p, double u_s) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
  h(1, 1) = p.delta;
  h(2, 2) = p.delta1;
  h(0, 2) = h(2, 0) = u_p / 2.0;
  h(1, 2) = h(2, 1) = u_s / 2.0;
  return h;
}

Eigen::MatrixXd three_level_generator(const ThreeLevelParams& p, double u_p, double u_s) {
  p.validate();
  if (!std::isfinite(u_p) || !std::isfinite(u_s)) {
    throw InvalidParameter("three_level_generator: non-finite control");
  }
  constexpr int d = 3;
  constexpr Eigen::Index n = d * d;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  h(1, 1) = p.delta;
  h(2, 2) = p.delta1;
  h(0, 2) = h(2, 0) = u_p / 2.0;
  h(1, 2) = h(2, 1) = u_s / 2.0;

  // For real symmetric H and rho = R + iA (R symmetric, A antisymmetric):
  //   d/dt R = H A - A H,   d/dt A = R H - H R.
  Eigen::MatrixXd gen(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Matrix3d re = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d im = Eigen::Matrix3d::Zero();
    if (col < d) {
      re(col, col) = 1.0;
    } else {
      const Eigen::Index pair = (col - d) / 2;
      const int i = pair < 2 ? 0 : 1;
      const int j = pair == 0 ? 1 : 2;
      if ((col - d) % 2 == 0) {
        re(i, j) = re(j, i) = 1.0;
      } else {
        im(i, j) = 1.0;
        im(j, i) = -1.0;
      }
    }
    const Eigen::Matrix3d dre = h * im - im * h;
    const Eigen::Matrix3d dim = re * h - h * re;
    for (int i = 0; i < d; ++i) {
      gen(i, col) = dre(i, i);
    }
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        const Eigen::Index row = coherence_index(d, i, j);
        gen(row, col) = dre(i, j);
        gen(row + 1, col) = dim(i, j);
      }
    }
  }
  return gen;
}

Eigen::MatrixXd lindblad_vectorize(const Eigen::MatrixXcd& hamiltonian,
                                   const std::vector<JumpOperator>& jumps) {
  if (hamiltonian.rows() != hamiltonian.cols()) {
    throw DimensionMismatch("lindblad_vectorize: Hamiltonian not square");
  }
  if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ContractViolation("lindblad_vectorize: Hamiltonian is not Hermitian");
  }
  const Eigen::Index d = hamiltonian.rows();
  for (const auto& j : jumps) {
    if (j.op.rows() != d || j.op.cols() != d) {
      throw DimensionMismatch("lindblad_vectorize: jump operator dimension mismatch");
    }
    if (!(j.rate >= 0.0) || !std::isfinite(j.rate)) {
      throw InvalidParameter("lindblad_vectorize: rates must be finite and non-negative");
    }
  }

  const Eigen::Index n = d * d;
  Eigen::MatrixXd gen(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    const Eigen::MatrixXcd rho = to_density(Eigen::VectorXd::Unit(n, col));
    Eigen::MatrixXcd drho = -kI * (hamiltonian * rho - rho * hamiltonian);
    for (const auto& j : jumps) {
      const Eigen::MatrixXcd ldag_l = j.op.adjoint() * j.op;
      drho += j.rate * (j.op * rho * j.op.adjoint() - 0.5 * (ldag_l * rho + rho * ldag_l));
    }
    gen.col(col) = to_real_vector(drho);
  }
  return gen;
}

SuperOperatorModel::SuperOperatorModel(Eigen::MatrixXd drift, std::vector<Eigen::MatrixXd> controls,
                                       std::vector<Eigen::Index> population_rows)
    : drift_(std::move(drift)),
      controls_(std::move(controls)),
      population_rows_(std::move(population_rows)) {
  if (drift_.rows() != drift_.cols()) {
    throw DimensionMismatch("SuperOperatorModel: drift not square");
  }
  for (const auto& c : controls_) {
    if (c.rows() != drift_.rows() || c.cols() != drift_.cols()) {
      throw DimensionMismatch("SuperOperatorModel: control matrix shape mismatch");
    }
  }
}

SuperOperatorModel SuperOperatorModel::two_level(const TwoLevelParams& p) {
  return SuperOperatorModel(two_level_generator(p, 0.0), {two_level_generator_du(p)},
                            first_rows(2));
}

SuperOperatorModel SuperOperatorModel::three_level(const ThreeLevelParams& p,
                                                   const std::vector<JumpOperator>& jumps) {
  Eigen::MatrixXd drift = three_level_generator(p, 0.0, 0.0);
  if (!jumps.empty()) {
    drift += lindblad_vectorize(Eigen::MatrixXcd::Zero(3, 3), jumps);
  }
  const ThreeLevelParams bare{0.0, 0.0};
  return SuperOperatorModel(
      std::move(drift),
      {three_level_generator(bare, 1.0, 0.0), three_level_generator(bare, 0.0, 1.0)},
      first_rows(3));
}

Eigen::MatrixXd SuperOperatorModel::generator(const Eigen::VectorXd& u) const {
  if (u.size() != static_cast<Eigen::Index>(controls_.size())) {
    throw DimensionMismatch("SuperOperatorModel::generator: wrong number of controls");
  }
  Eigen::MatrixXd g = drift_;
  for (std::size_t k = 0; k < controls_.size(); ++k) {
    g += u(static_cast<Eigen::Index>(k)) * controls_[k];
  }
  return g;
}

Trajectory propagate_rk4(const SuperOperatorModel& model, const Eigen::VectorXd& x0,
                         const ControlSignal& u_of_t, double t0, double tf, int steps) {
  if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0)) {
    throw InvalidParameter("propagate_rk4: invalid horizon");
  }
  if (steps < 10) {
    throw InvalidParameter("propagate_rk4: need at least 10 steps");
  }
  if (x0.size() != model.dim()) {
    throw DimensionMismatch("propagate_rk4: initial state dimension mismatch");
  }
  const double h = (tf - t0) / steps;
  Trajectory traj;
  traj.t.reserve(static_cast<std::size_t>(steps) + 1);
  traj.x.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd x = x0;
  traj.t.push_back(t0);
  traj.x.push_back(x);
  auto rhs = [&](double t, const Eigen::VectorXd& state) {
    return Eigen::VectorXd(model.generator(u_of_t(t)) * state);
  };
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const Eigen::VectorXd k1 = rhs(t, x);
    const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw NumericalError("propagate_rk4: state became non-finite");
    }
    traj.t.push_back(k + 1 == steps ? tf : t0 + (k + 1) * h);
    traj.x.push_back(x);
  }
  return traj;
}

}  // namespace cvqoc::lindblad
