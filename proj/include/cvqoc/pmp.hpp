#pragma once

// Indirect (Pontryagin) formulation of the constrained time-energy transfer
// problem
//
//   min  Gamma tf + eta int u^2 dt + epsilon int nu^2 dt,   x' = L(u) x,   u = phi(nu)
//
// with Hamiltonian H = eta|u|^2 + epsilon|nu|^2 + lambda^T L(u) x + beta^T (u - phi(nu)).
// The residual system collocates the state/costate dynamics, the two
// stationarity conditions, the saturation constraint and the free-final-time
// transversality condition H(tf) = -Gamma.

#include "cvqoc/collocation.hpp"
#include "cvqoc/lindblad.hpp"

#include <Eigen/Dense>
#include <vector>

namespace cvqoc::pmp {

struct OcpConfig {
  double gamma = 1.0;    // time weight
  double eta = 1.0;      // control energy weight
  double epsilon = 1e-2; // regularization of the unconstrained control
  double mu_minus = -2.0;
  double mu_plus = 2.0;   // mu_plus == mu_minus forces u to that constant
  double c_sat = 1.0;    // saturation steepness
  Eigen::VectorXd rho_i;
  Eigen::VectorXd rho_f;
  Eigen::VectorXd lambda_f;  // zero for this problem
  double t0 = 0.0;

  /// Throws InvalidParameter on any broken invariant (positivity, ordered bounds,
  /// density-vector trace/population ranges).
  void validate() const;
};

/// phi(nu) = mu+ - dmu / (1 + exp(c nu / dmu)), dmu = mu+ - mu-.
double saturation(double nu, const OcpConfig& cfg);
/// d phi / d nu, evaluated without overflow.
double saturation_dnu(double nu, const OcpConfig& cfg);
/// Inverse of saturation on (mu-, mu+).
double saturation_inverse(double u, const OcpConfig& cfg);

double hamiltonian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& nu,
                   const Eigen::VectorXd& beta, const OcpConfig& cfg,
                   const lindblad::SuperOperatorModel& model);

/// Approximant values at one collocation node (time derivatives in physical time).
struct NodeValues {
  Eigen::VectorXd rho, drho_dt;
  Eigen::VectorXd lambda, dlambda_dt;
  Eigen::VectorXd u, nu, beta;
};

struct NodeResiduals {
  Eigen::VectorXd rho;     // rho' - L(u) rho
  Eigen::VectorXd lambda;  // lambda' + L(u)^T lambda
  Eigen::VectorXd u;       // lambda^T dL/du rho + 2 eta u + beta
  Eigen::VectorXd nu;      // 2 epsilon nu - beta phi'(nu)
  Eigen::VectorXd phi;     // u - phi(nu)
};

NodeResiduals node_residuals(const NodeValues& v, const OcpConfig& cfg,
                             const lindblad::SuperOperatorModel& model);

/// Optional per-family scaling of residual rows (all ones reproduces the plain loss).
struct ResidualWeights {
  double rho = 1.0;
  double lambda = 1.0;
  double u = 1.0;
  double nu = 1.0;
  double phi = 1.0;
  double hamiltonian = 1.0;

  /// Gives the single terminal row weight sqrt(n_nodes).
  static ResidualWeights terminal_scaled(std::size_t n_nodes);
};

/// Residual vector length for N nodes: N (2 dim + 3 m) + 1.
Eigen::Index residual_length(std::size_t n_nodes, Eigen::Index dim, std::size_t n_controls);

/// State (two-point), costate (final point) and free-function control,
/// unconstrained control and multiplier, all over one shared QnnBank.
///
/// Residual layout, node-major in node order:
///   [Xi_rho (dim), Xi_lambda (dim), Xi_u (m), Xi_nu (m), Xi_phi (m)] per node, then Xi_H.
class PmpResidualSystem : public QnnCollocationSystem {
 public:
  struct Settings {
    bool free_final_time = true;
    std::pair<double, double> c_map_bounds{0.05, 20.0};
    ResidualWeights weights;
    double h_tau = 0.0;
    double tau0 = tfc::kDefaultTau0;
    double tauf = tfc::kDefaultTauF;
  };

  /// `tf_guess` seeds the morph; with free final time it is refined via c_map.
  PmpResidualSystem(lindblad::SuperOperatorModel model, OcpConfig cfg, cvqnn::QnnBank bank,
                    double tf_guess, std::vector<double> nodes, Settings settings);

  Eigen::VectorXd residuals() override;
  LossBreakdown breakdown() override;

  NodeValues values_at(double tau);
  double hamiltonian_at(double tau);

  const OcpConfig& config() const { return cfg_; }
  const lindblad::SuperOperatorModel& model() const { return model_; }
  std::size_t n_controls() const { return model_.n_controls(); }

  static constexpr std::size_t kRho = 0;
  static constexpr std::size_t kLambda = 1;
  static constexpr std::size_t kU = 2;
  static constexpr std::size_t kNu = 3;
  static constexpr std::size_t kBeta = 4;

 private:
  lindblad::SuperOperatorModel model_;
  OcpConfig cfg_;
  Settings settings_;
};

}  // namespace cvqoc::pmp
