#include "cvqoc/benchmark.hpp"

#include <cmath>

namespace cvqoc {

LinearOdeSystem::LinearOdeSystem(double rate, double y0, tfc::TimeMorph morph,
                                 cvqnn::QnnBank bank, std::vector<double> nodes, double h_tau)
    : QnnCollocationSystem(std::move(bank), morph, std::move(nodes), Options{std::nullopt, h_tau}),
      rate_(rate),
      y0_(y0) {
  add_unknown(1, {{tfc::Location::Initial, Eigen::VectorXd::Constant(1, y0)}});
}

Eigen::VectorXd LinearOdeSystem::residuals() {
  const auto& taus = nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(taus.size()));
  for (std::size_t l = 0; l < taus.size(); ++l) {
    const tfc::ExprValue y = eval_unknown(0, taus[l]);
    out(static_cast<Eigen::Index>(l)) = y.dvalue_dt(0) - rate_ * y.value(0);
  }
  return out;
}

LossBreakdown LinearOdeSystem::breakdown() {
  LossBreakdown b;
  b.l2_total = residuals().norm();
  b.l2_rho = b.l2_total;
  b.c_map = morph().c_map();
  b.tf = morph().tf();
  return b;
}

double LinearOdeSystem::value_at(double t) {
  return eval_unknown(0, morph().to_tau(t)).value(0);
}

double LinearOdeSystem::exact(double t) const {
  return y0_ * std::exp(rate_ * (t - morph().t0()));
}

}  // namespace cvqoc
