#include "cvqoc/collocation.hpp"

#include "cvqoc/errors.hpp"
#include "cvqoc/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace cvqoc {

FeatureTable::FeatureTable(std::vector<double> taus, double h, int cutoff)
    : taus_(std::move(taus)), h_(h) {
  if (!(h > 0.0)) {
    throw InvalidParameter("FeatureTable: step must be positive");
  }
  std::sort(taus_.begin(), taus_.end());
  taus_.erase(std::unique(taus_.begin(), taus_.end()), taus_.end());
  const std::size_t n = taus_.size();
  std::vector<std::optional<fock::FockVector>> c(n), m(n), p(n);
  parallel_for(n, [&](std::size_t i) {
    c[i] = cvqnn::encode_input(taus_[i], cutoff);
    m[i] = cvqnn::encode_input(taus_[i] - h_, cutoff);
    p[i] = cvqnn::encode_input(taus_[i] + h_, cutoff);
  });
  for (std::size_t i = 0; i < n; ++i) {
    center_.push_back(std::move(*c[i]));
    minus_.push_back(std::move(*m[i]));
    plus_.push_back(std::move(*p[i]));
  }
  sigma_.resize(n);
  dsigma_.resize(n);
}

void FeatureTable::refresh(const cvqnn::QnnBank& bank) {
  if (filled_ && bank.version() == bank_version_) {
    return;
  }
  parallel_for(taus_.size(), [&](std::size_t i) {
    sigma_[i] = bank.features(center_[i]);
    dsigma_[i] = (bank.features(plus_[i]) - bank.features(minus_[i])) / (2.0 * h_);
  });
  bank_version_ = bank.version();
  filled_ = true;
}

std::optional<std::size_t> FeatureTable::find(double tau) const {
  const auto it = std::lower_bound(taus_.begin(), taus_.end(), tau);
  if (it != taus_.end() && *it == tau) {
    return static_cast<std::size_t>(it - taus_.begin());
  }
  return std::nullopt;
}

namespace {

std::vector<double> with_endpoints(std::vector<double> nodes, const tfc::TimeMorph& morph) {
  nodes.push_back(morph.tau0());
  nodes.push_back(morph.tauf());
  return nodes;
}

double default_step(const QnnCollocationSystem::Options& options, const tfc::TimeMorph& morph) {
  return options.h_tau > 0.0 ? options.h_tau : 1e-4 * (morph.tauf() - morph.tau0());
}

}  // namespace

QnnCollocationSystem::QnnCollocationSystem(cvqnn::QnnBank bank, tfc::TimeMorph morph,
                                           std::vector<double> nodes, Options options)
    : bank_(std::move(bank)),
      morph_(morph),
      nodes_(std::move(nodes)),
      options_(options),
      table_(with_endpoints(nodes_, morph_), default_step(options_, morph_), bank_.cutoff()) {
  if (nodes_.empty()) {
    throw InvalidParameter("QnnCollocationSystem: no collocation nodes");
  }
  for (double tau : nodes_) {
    if (!morph_.contains(tau)) {
      throw DomainError("QnnCollocationSystem: node outside the tau domain");
    }
  }
  if (options_.c_map_bounds) {
    const auto [lo, hi] = *options_.c_map_bounds;
    if (!(lo > 0.0) || !(hi > lo)) {
      throw InvalidParameter("QnnCollocationSystem: invalid c_map bounds");
    }
    const double c = std::clamp(morph_.c_map(), lo, hi);
    morph_ = tfc::TimeMorph::from_rate(morph_.t0(), c, morph_.tau0(), morph_.tauf());
  }
}

std::size_t QnnCollocationSystem::add_unknown(Eigen::Index dim,
                                              std::vector<tfc::BoundaryConstraint> constraints) {
  const std::size_t j = weights_.size();
  weights_.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bank_.size()), dim));
  tfc::FreeFunction fn;
  fn.dim = dim;
  fn.eval = [this, j](double tau) { return free_value(j, tau); };
  fn.version = [this] { return version_; };
  exprs_.push_back(
      std::make_unique<tfc::ConstrainedExpression>(std::move(fn), std::move(constraints), morph_));
  ++version_;
  return j;
}

tfc::FreeValue QnnCollocationSystem::free_value(std::size_t j, double tau) const {
  const Eigen::MatrixXd& w = weights_[j];
  if (const auto idx = table_.find(tau); idx && table_.bank_version() == bank_.version()) {
    return {w.transpose() * table_.sigma(*idx), w.transpose() * table_.dsigma(*idx)};
  }
  return {w.transpose() * cvqnn::forward(bank_, tau),
          w.transpose() * cvqnn::forward_dtau(bank_, tau, table_.h())};
}

std::size_t QnnCollocationSystem::xi_size() const {
  std::size_t n = 0;
  for (const auto& w : weights_) {
    n += static_cast<std::size_t>(w.size());
  }
  return n + (free_final_time() ? 1 : 0);
}

Eigen::VectorXd QnnCollocationSystem::xi() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xi_size()));
  Eigen::Index offset = 0;
  for (const auto& w : weights_) {
    out.segment(offset, w.size()) = w.reshaped();
    offset += w.size();
  }
  if (free_final_time()) {
    out(offset) = morph_.c_map();
  }
  return out;
}

void QnnCollocationSystem::set_xi(const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(xi_size())) {
    throw DimensionMismatch("set_xi: wrong decision length");
  }
  if (!values.allFinite()) {
    throw NumericalError("set_xi: non-finite decision values");
  }
  Eigen::Index offset = 0;
  for (auto& w : weights_) {
    w.reshaped() = values.segment(offset, w.size());
    offset += w.size();
  }
  if (free_final_time()) {
    const auto [lo, hi] = *options_.c_map_bounds;
    morph_ = tfc::TimeMorph::from_rate(morph_.t0(), std::clamp(values(offset), lo, hi),
                                       morph_.tau0(), morph_.tauf());
  }
  ++version_;
  ++writes_;
}

void QnnCollocationSystem::set_theta(const Eigen::VectorXd& values) {
  bank_.set_parameters(values);
  ++version_;
  ++writes_;
}

void QnnCollocationSystem::refresh_if_needed() {
  if (refreshed_version_ == version_) {
    return;
  }
  table_.refresh(bank_);
  for (auto& e : exprs_) {
    e->set_morph(morph_);
    e->refresh();
  }
  refreshed_version_ = version_;
  ++refreshes_;
}

tfc::ExprValue QnnCollocationSystem::eval_unknown(std::size_t j, double tau) {
  refresh_if_needed();
  return exprs_.at(j)->eval(tau);
}

}  // namespace cvqoc
