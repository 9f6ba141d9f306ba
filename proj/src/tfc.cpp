#include "cvqoc/tfc.hpp"

#include "cvqoc/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cvqoc::tfc {

namespace {

void check_domain(double tau, const TimeMorph& morph) {
  if (!morph.contains(tau)) {
    throw DomainError("tau = " + std::to_string(tau) + " outside [" +
                      std::to_string(morph.tau0()) + ", " + std::to_string(morph.tauf()) + "]");
  }
}

}  // namespace

TimeMorph::TimeMorph(double t0, double tf, double tau0, double tauf)
    : t0_(t0), tf_(tf), tau0_(tau0), tauf_(tauf), c_map_(0.0) {
  if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0)) {
    throw InvalidParameter("TimeMorph: need finite t0 < tf");
  }
  if (!std::isfinite(tau0) || !std::isfinite(tauf) || !(tauf > tau0)) {
    throw InvalidParameter("TimeMorph: need finite tau0 < tauf");
  }
  c_map_ = (tauf - tau0) / (tf - t0);
}

TimeMorph TimeMorph::from_rate(double t0, double c_map, double tau0, double tauf) {
  if (!(c_map > 0.0) || !std::isfinite(c_map)) {
    throw InvalidParameter("TimeMorph: c_map must be positive");
  }
  return TimeMorph(t0, t0 + (tauf - tau0) / c_map, tau0, tauf);
}

bool TimeMorph::contains(double tau) const {
  const double slack = 1e-12 * (tauf_ - tau0_);
  return tau >= tau0_ - slack && tau <= tauf_ + slack;
}

double omega(int k, double tau, const TimeMorph& morph) {
  check_domain(tau, morph);
  const double s = (tau - morph.tau0()) / (morph.tauf() - morph.tau0());
  const double blend = -2.0 * s * s * s + 3.0 * s * s;
  switch (k) {
    case 1:
      return 1.0 - blend;
    case 2:
      return blend;
    default:
      throw InvalidParameter("omega: k must be 1 or 2");
  }
}

double omega_prime(int k, double tau, const TimeMorph& morph) {
  check_domain(tau, morph);
  const double width = morph.tauf() - morph.tau0();
  const double s = (tau - morph.tau0()) / width;
  const double slope = 6.0 * s * (1.0 - s) / width;
  switch (k) {
    case 1:
      return -slope;
    case 2:
      return slope;
    default:
      throw InvalidParameter("omega_prime: k must be 1 or 2");
  }
}

std::vector<double> cgl_nodes(int n, double tau0, double tauf) {
  if (n < 2) {
    throw InvalidParameter("cgl_nodes: need at least 2 nodes");
  }
  std::vector<double> nodes(static_cast<std::size_t>(n));
  const double mid = 0.5 * (tau0 + tauf);
  const double half = 0.5 * (tauf - tau0);
  for (int k = 0; k < n; ++k) {
    nodes[static_cast<std::size_t>(k)] = mid - half * std::cos(std::numbers::pi * k / (n - 1));
  }
  nodes.front() = tau0;
  nodes.back() = tauf;
  return nodes;
}

ConstrainedExpression::ConstrainedExpression(FreeFunction free_function,
                                             std::vector<BoundaryConstraint> constraints,
                                             TimeMorph morph)
    : free_(std::move(free_function)), morph_(morph) {
  if (free_.dim < 1 || !free_.eval || !free_.version) {
    throw InvalidParameter("ConstrainedExpression: incomplete free function");
  }
  for (auto& c : constraints) {
    if (c.value.size() != free_.dim) {
      throw DimensionMismatch("ConstrainedExpression: constraint dimension mismatch");
    }
    if (!c.value.allFinite()) {
      throw InvalidParameter("ConstrainedExpression: non-finite constraint value");
    }
    auto& slot = c.location == Location::Initial ? initial_ : final_;
    if (slot) {
      throw InvalidParameter("ConstrainedExpression: duplicate constraint location");
    }
    slot = std::move(c.value);
  }
}

void ConstrainedExpression::refresh() {
  cached_version_ = free_.version();
  if (initial_) {
    theta0_ = free_.eval(morph_.tau0()).value;
  }
  if (final_) {
    thetaf_ = free_.eval(morph_.tauf()).value;
  }
  cached_ = true;
}

ExprValue ConstrainedExpression::eval(double tau) const {
  check_domain(tau, morph_);
  if (!cached_ || free_.version() != cached_version_) {
    throw StaleCache("ConstrainedExpression: free function changed since last refresh");
  }
  FreeValue theta = free_.eval(tau);
  ExprValue out{std::move(theta.value), std::move(theta.dvalue_dtau)};
  if (initial_) {
    const double w = omega(1, tau, morph_);
    const double dw = omega_prime(1, tau, morph_);
    out.value += w * (*initial_ - theta0_);
    out.dvalue_dt += dw * (*initial_ - theta0_);
  }
  if (final_) {
    const double w = omega(2, tau, morph_);
    const double dw = omega_prime(2, tau, morph_);
    out.value += w * (*final_ - thetaf_);
    out.dvalue_dt += dw * (*final_ - thetaf_);
  }
  out.dvalue_dt *= morph_.c_map();
  return out;
}

}  // namespace cvqoc::tfc
