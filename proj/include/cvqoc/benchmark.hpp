#pragma once

#include "cvqoc/collocation.hpp"

namespace cvqoc {

/// Scalar linear ODE y' = rate * y, y(t0) = y0 on a fixed horizon [t0, tf],
/// approximated by one initial-point constrained expression.
class LinearOdeSystem : public QnnCollocationSystem {
 public:
  LinearOdeSystem(double rate, double y0, tfc::TimeMorph morph, cvqnn::QnnBank bank,
                  std::vector<double> nodes, double h_tau = 0.0);

  /// y' - rate * y at every node.
  Eigen::VectorXd residuals() override;
  LossBreakdown breakdown() override;

  /// Approximant value at a physical time.
  double value_at(double t);
  /// y0 * exp(rate (t - t0)).
  double exact(double t) const;

  double rate() const { return rate_; }
  double y0() const { return y0_; }

 private:
  double rate_;
  double y0_;
};

}  // namespace cvqoc
