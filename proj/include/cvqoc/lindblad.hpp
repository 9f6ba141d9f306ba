#pragma once

// Real vectorized Lindblad generators (hbar = 1).
//
// A d-level density matrix is stored as the real vector
//   (rho_00, ..., rho_{d-1,d-1}, Re rho_01, Im rho_01, Re rho_02, Im rho_02, ..., Re rho_{d-2,d-1}, Im rho_{d-2,d-1})
// i.e. populations first, then coherences for pairs i < j in lexicographic
// order. For the qubit (g = 0, e = 1) this is (rho_gg, rho_ee, Re rho_ge, Im rho_ge).

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

namespace cvqoc::lindblad {

using Complex = std::complex<double>;

struct TwoLevelParams {
  double gamma_eg = 0.1;  // absorption g -> e
  double gamma_ge = 0.3;  // emission e -> g
  double omega_x = 1.0;
  double omega_z = 2.0;

  void validate() const;
};

struct ThreeLevelParams {
  double delta = 0.1;   // two-photon detuning
  double delta1 = 1.0;  // one-photon detuning; arbitrary default

  void validate() const;
};

struct JumpOperator {
  Eigen::MatrixXcd op;
  double rate = 0.0;
};

/// Number of levels d for a real vector of length d^2.
int levels_for_dim(Eigen::Index dim);

Eigen::VectorXd to_real_vector(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd to_density(const Eigen::VectorXd& x);
double trace(const Eigen::VectorXd& x);

Eigen::Matrix4d two_level_generator(const TwoLevelParams& p, double u);
/// d/du of two_level_generator: -1 at (Re, Im), +1 at (Im, Re).
Eigen::Matrix4d two_level_generator_du(const TwoLevelParams& p);

/// Closed-system generator of rho' = -i[H, rho] for
/// H = delta s22 + delta1 s33 + (u_p/2 s13 + u_s/2 s23 + h.c.).
Eigen::MatrixXd three_level_generator(const ThreeLevelParams& p, double u_p, double u_s);

/// Generator of rho' = -i[H, rho] + sum_k rate_k (L rho L^dag - {L^dag L, rho}/2).
Eigen::MatrixXd lindblad_vectorize(const Eigen::MatrixXcd& hamiltonian,
                                   const std::vector<JumpOperator>& jumps);

/// The driven qubit Hamiltonian omega_x (s_eg + s_ge) + omega_z (s_ee - s_gg) + u s_ee.
Eigen::MatrixXcd two_level_hamiltonian(const TwoLevelParams& p, double u);
/// Jumps s_eg (rate gamma_eg) and s_ge (rate gamma_ge).
std::vector<JumpOperator> two_level_jumps(const TwoLevelParams& p);
Eigen::MatrixXcd three_level_hamiltonian(const ThreeLevelParams& p, double u_p, double u_s);

/// Control-affine generator L(u) = drift + sum_k u_k * control_k.
class SuperOperatorModel {
 public:
  SuperOperatorModel(Eigen::MatrixXd drift, std::vector<Eigen::MatrixXd> controls,
                     std::vector<Eigen::Index> population_rows);

  static SuperOperatorModel two_level(const TwoLevelParams& p);
  /// Closed three-level system; `jumps` attaches optional dissipators.
  static SuperOperatorModel three_level(const ThreeLevelParams& p,
                                        const std::vector<JumpOperator>& jumps = {});

  Eigen::Index dim() const { return drift_.rows(); }
  std::size_t n_controls() const { return controls_.size(); }

  Eigen::MatrixXd generator(const Eigen::VectorXd& u) const;
  const Eigen::MatrixXd& generator_du(std::size_t k) const { return controls_.at(k); }
  const Eigen::MatrixXd& drift() const { return drift_; }
  const std::vector<Eigen::Index>& population_rows() const { return population_rows_; }

 private:
  Eigen::MatrixXd drift_;
  std::vector<Eigen::MatrixXd> controls_;
  std::vector<Eigen::Index> population_rows_;
};

using ControlSignal = std::function<Eigen::VectorXd(double t)>;

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
};

/// Fixed-step classical RK4 on x' = L(u(t)) x; returns steps + 1 samples.
Trajectory propagate_rk4(const SuperOperatorModel& model, const Eigen::VectorXd& x0,
                         const ControlSignal& u_of_t, double t0, double tf, int steps);

}  // namespace cvqoc::lindblad
