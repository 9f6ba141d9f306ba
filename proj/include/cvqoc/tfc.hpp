#pragma once

// Functional-connection constrained expressions on a morphed time axis.
//
// A physical time t in [t0, tf] is mapped to tau = tau0 + c_map (t - t0) with
// tau in [tau0, tauf]. Boundary values are embedded through the cubic
// switching functions
//   Omega_1 = 1 + 2 s^3 - 3 s^2,   Omega_2 = -2 s^3 + 3 s^2,   s = (tau - tau0)/(tauf - tau0),
// so the expression hits its constraints for every choice of free function.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace cvqoc::tfc {

/// Default morph target domain; keeps displacement encoding inside |tau| <= 1.
inline constexpr double kDefaultTau0 = -0.8;
inline constexpr double kDefaultTauF = 0.8;

class TimeMorph {
 public:
  /// Morph mapping [t0, tf] onto [tau0, tauf]; requires tf > t0 and tauf > tau0.
  TimeMorph(double t0, double tf, double tau0 = kDefaultTau0, double tauf = kDefaultTauF);

  /// Morph defined by its rate instead of the final time.
  static TimeMorph from_rate(double t0, double c_map, double tau0 = kDefaultTau0,
                             double tauf = kDefaultTauF);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  double tau0() const { return tau0_; }
  double tauf() const { return tauf_; }
  double c_map() const { return c_map_; }

  double to_tau(double t) const { return tau0_ + c_map_ * (t - t0_); }
  double to_t(double tau) const { return t0_ + (tau - tau0_) / c_map_; }
  bool contains(double tau) const;

 private:
  double t0_, tf_, tau0_, tauf_, c_map_;
};

enum class Location { Initial, Final };

struct BoundaryConstraint {
  Location location;
  Eigen::VectorXd value;
};

/// Switching function Omega_k, k in {1, 2}.
double omega(int k, double tau, const TimeMorph& morph);
/// d Omega_k / d tau.
double omega_prime(int k, double tau, const TimeMorph& morph);

/// Chebyshev-Gauss-Lobatto nodes on [tau0, tauf], ascending, endpoints included.
std::vector<double> cgl_nodes(int n, double tau0, double tauf);

/// Value and tau-derivative of a free function at one point.
struct FreeValue {
  Eigen::VectorXd value;
  Eigen::VectorXd dvalue_dtau;
};

/// Free function handle. `version` must change whenever the function changes.
struct FreeFunction {
  Eigen::Index dim = 0;
  std::function<FreeValue(double tau)> eval;
  std::function<std::uint64_t()> version;
};

struct ExprValue {
  Eigen::VectorXd value;
  Eigen::VectorXd dvalue_dt;  // c_map * d/dtau
};

class ConstrainedExpression {
 public:
  /// At most one constraint per location; constraint values must be finite and
  /// match the free-function dimension.
  ConstrainedExpression(FreeFunction free_function, std::vector<BoundaryConstraint> constraints,
                        TimeMorph morph);

  /// Recomputes theta(tau0) and theta(tauf) for the current free-function version.
  void refresh();
  void set_morph(const TimeMorph& morph) { morph_ = morph; }

  /// Throws DomainError outside [tau0, tauf] and StaleCache if the free function
  /// changed since the last refresh().
  ExprValue eval(double tau) const;

  const TimeMorph& morph() const { return morph_; }
  Eigen::Index dim() const { return free_.dim; }
  const std::optional<Eigen::VectorXd>& initial() const { return initial_; }
  const std::optional<Eigen::VectorXd>& final() const { return final_; }
  std::uint64_t cached_version() const { return cached_version_; }

 private:
  FreeFunction free_;
  TimeMorph morph_;
  std::optional<Eigen::VectorXd> initial_;
  std::optional<Eigen::VectorXd> final_;
  Eigen::VectorXd theta0_;
  Eigen::VectorXd thetaf_;
  std::uint64_t cached_version_ = 0;
  bool cached_ = false;
};

}  // namespace cvqoc::tfc
