#pragma once

// Shared machinery for QNN-backed collocation problems: a feature table over
// the collocation nodes, constrained expressions whose free functions are
// weighted QNN features, and the decision-vector bookkeeping the optimizers
// drive.

#include "cvqoc/cvqnn.hpp"
#include "cvqoc/tfc.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace cvqoc {

/// Per-epoch residual breakdown (L2 norms per family).
struct LossBreakdown {
  double l2_total = 0.0;
  double l2_rho = 0.0;
  double l2_lambda = 0.0;
  double l2_u = 0.0;
  double l2_nu = 0.0;
  double l2_phi = 0.0;
  double xi_h = 0.0;
  double c_map = 0.0;
  double tf = 0.0;
};

/// sigma and d sigma / d tau on a fixed set of tau points.
///
/// Encoded input states D(tau)|0>, D(tau +- h)|0> do not depend on the
/// circuit parameters and are built once; features are rebuilt per bank
/// version.
class FeatureTable {
 public:
  FeatureTable(std::vector<double> taus, double h, int cutoff);

  void refresh(const cvqnn::QnnBank& bank);
  std::uint64_t bank_version() const { return bank_version_; }

  /// Index of an exact tabulated tau, if any.
  std::optional<std::size_t> find(double tau) const;
  const Eigen::VectorXd& sigma(std::size_t i) const { return sigma_[i]; }
  const Eigen::VectorXd& dsigma(std::size_t i) const { return dsigma_[i]; }
  const std::vector<double>& taus() const { return taus_; }
  double h() const { return h_; }

 private:
  std::vector<double> taus_;
  double h_;
  std::vector<fock::FockVector> center_, minus_, plus_;
  std::vector<Eigen::VectorXd> sigma_, dsigma_;
  std::uint64_t bank_version_ = 0;
  bool filled_ = false;
};

/// Base for residual systems whose unknowns are constrained expressions with
/// free functions theta_j(tau) = W_j^T sigma(tau) over one shared QnnBank.
///
/// Decision layout:
///   xi()    = [vec(W_0), vec(W_1), ..., c_map?]   (vec is column-major, L x d)
///   theta() = bank parameters
/// Every write bumps version(); caches are refreshed lazily before the next
/// residual evaluation.
class QnnCollocationSystem {
 public:
  struct Options {
    /// When set, c_map is the last xi entry, clamped to these bounds.
    std::optional<std::pair<double, double>> c_map_bounds;
    /// Finite-difference step for d sigma / d tau; <= 0 means 1e-4 of the tau width.
    double h_tau = 0.0;
  };

  QnnCollocationSystem(cvqnn::QnnBank bank, tfc::TimeMorph morph, std::vector<double> nodes,
                       Options options);
  virtual ~QnnCollocationSystem() = default;
  QnnCollocationSystem(const QnnCollocationSystem&) = delete;
  QnnCollocationSystem& operator=(const QnnCollocationSystem&) = delete;

  Eigen::VectorXd xi() const;
  void set_xi(const Eigen::VectorXd& values);
  Eigen::VectorXd theta() const { return bank_.parameters(); }
  void set_theta(const Eigen::VectorXd& values);

  std::size_t xi_size() const;
  std::size_t theta_size() const { return bank_.parameter_count(); }

  virtual Eigen::VectorXd residuals() = 0;
  virtual LossBreakdown breakdown() = 0;

  std::uint64_t version() const { return version_; }
  std::uint64_t writes() const { return writes_; }
  std::uint64_t refreshes() const { return refreshes_; }

  const cvqnn::QnnBank& bank() const { return bank_; }
  const tfc::TimeMorph& morph() const { return morph_; }
  const std::vector<double>& nodes() const { return nodes_; }
  bool free_final_time() const { return options_.c_map_bounds.has_value(); }

  /// Evaluates unknown j at any tau in the domain.
  tfc::ExprValue eval_unknown(std::size_t j, double tau);

 protected:
  std::size_t add_unknown(Eigen::Index dim, std::vector<tfc::BoundaryConstraint> constraints);
  void refresh_if_needed();
  const tfc::ConstrainedExpression& expr(std::size_t j) const { return *exprs_[j]; }
  std::size_t n_unknowns() const { return exprs_.size(); }

 private:
  tfc::FreeValue free_value(std::size_t j, double tau) const;

  cvqnn::QnnBank bank_;
  tfc::TimeMorph morph_;
  std::vector<double> nodes_;
  Options options_;
  FeatureTable table_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<std::unique_ptr<tfc::ConstrainedExpression>> exprs_;
  std::uint64_t version_ = 1;
  std::uint64_t refreshed_version_ = 0;
  std::uint64_t writes_ = 0;
  std::uint64_t refreshes_ = 0;
};

}  // namespace cvqoc
