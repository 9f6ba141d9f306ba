#include "cvqoc/pmp.hpp"

#include "cvqoc/errors.hpp"
#include "cvqoc/parallel.hpp"

#include <cmath>

namespace cvqoc::pmp {

namespace {

void check_density_vector(const Eigen::VectorXd& x, const char* name) {
  const int d = lindblad::levels_for_dim(x.size());
  if (!x.allFinite()) {
    throw InvalidParameter(std::string(name) + ": non-finite entries");
  }
  const Eigen::VectorXd pops = x.head(d);
  if (std::abs(pops.sum() - 1.0) > 1e-9) {
    throw InvalidParameter(std::string(name) + ": populations must sum to 1");
  }
  if (pops.minCoeff() < -1e-9 || pops.maxCoeff() > 1.0 + 1e-9) {
    throw InvalidParameter(std::string(name) + ": populations outside [0, 1]");
  }
}

double delta_mu(const OcpConfig& cfg) { return cfg.mu_plus - cfg.mu_minus; }

}  // namespace

void OcpConfig::validate() const {
  if (!(gamma > 0.0) || !(eta > 0.0) || !(epsilon > 0.0) || !(c_sat > 0.0)) {
    throw InvalidParameter("OcpConfig: Gamma, eta, epsilon and c_sat must be positive");
  }
  // mu_plus == mu_minus pins the control to that value (phi constant).
  if (!(mu_plus >= mu_minus) || !std::isfinite(mu_plus) || !std::isfinite(mu_minus)) {
    throw InvalidParameter("OcpConfig: need finite mu_plus >= mu_minus");
  }
  check_density_vector(rho_i, "rho_i");
  check_density_vector(rho_f, "rho_f");
  if (rho_i.size() != rho_f.size() || lambda_f.size() != rho_i.size()) {
    throw DimensionMismatch("OcpConfig: boundary vectors must share one dimension");
  }
  if (!std::isfinite(t0)) {
    throw InvalidParameter("OcpConfig: t0 must be finite");
  }
}

double saturation(double nu, const OcpConfig& cfg) {
  const double dmu = delta_mu(cfg);
  if (dmu == 0.0) {
    return cfg.mu_plus;
  }
  const double z = cfg.c_sat * nu / dmu;
  if (z > 0.0) {
    const double e = std::exp(-z);
    return cfg.mu_plus - dmu * e / (1.0 + e);
  }
  return cfg.mu_plus - dmu / (1.0 + std::exp(z));
}

double saturation_dnu(double nu, const OcpConfig& cfg) {
  if (delta_mu(cfg) == 0.0) {
    return 0.0;
  }
  const double z = cfg.c_sat * nu / delta_mu(cfg);
  const double e = std::exp(-std::abs(z));
  return cfg.c_sat * e / ((1.0 + e) * (1.0 + e));
}

double saturation_inverse(double u, const OcpConfig& cfg) {
  if (!(u > cfg.mu_minus && u < cfg.mu_plus)) {
    throw DomainError("saturation_inverse: value outside (mu-, mu+)");
  }
  const double dmu = delta_mu(cfg);
  // phi = mu+ - dmu / (1 + e^z)  =>  e^z = dmu / (mu+ - phi) - 1
  return dmu / cfg.c_sat * std::log((u - cfg.mu_minus) / (cfg.mu_plus - u));
}

double hamiltonian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& nu,
                   const Eigen::VectorXd& beta, const OcpConfig& cfg,
                   const lindblad::SuperOperatorModel& model) {
  double h = cfg.eta * u.squaredNorm() + cfg.epsilon * nu.squaredNorm();
  h += lambda.dot(model.generator(u) * x);
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    h += beta(k) * (u(k) - saturation(nu(k), cfg));
  }
  return h;
}

NodeResiduals node_residuals(const NodeValues& v, const OcpConfig& cfg,
                             const lindblad::SuperOperatorModel& model) {
  const Eigen::MatrixXd gen = model.generator(v.u);
  NodeResiduals r;
  r.rho = v.drho_dt - gen * v.rho;
  r.lambda = v.dlambda_dt + gen.transpose() * v.lambda;
  const Eigen::Index m = v.u.size();
  r.u.resize(m);
  r.nu.resize(m);
  r.phi.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    r.u(k) = v.lambda.dot(model.generator_du(ks) * v.rho) + 2.0 * cfg.eta * v.u(k) + v.beta(k);
    r.nu(k) = 2.0 * cfg.epsilon * v.nu(k) - v.beta(k) * saturation_dnu(v.nu(k), cfg);
    r.phi(k) = v.u(k) - saturation(v.nu(k), cfg);
  }
  return r;
}

ResidualWeights ResidualWeights::terminal_scaled(std::size_t n_nodes) {
  ResidualWeights w;
  w.hamiltonian = std::sqrt(static_cast<double>(n_nodes));
  return w;
}

Eigen::Index residual_length(std::size_t n_nodes, Eigen::Index dim, std::size_t n_controls) {
  return static_cast<Eigen::Index>(n_nodes) * (2 * dim + 3 * static_cast<Eigen::Index>(n_controls)) +
         1;
}

namespace {

QnnCollocationSystem::Options collocation_options(const PmpResidualSystem::Settings& s) {
  QnnCollocationSystem::Options o;
  if (s.free_final_time) {
    o.c_map_bounds = s.c_map_bounds;
  }
  o.h_tau = s.h_tau;
  return o;
}

}  // namespace

PmpResidualSystem::PmpResidualSystem(lindblad::SuperOperatorModel model, OcpConfig cfg,
                                     cvqnn::QnnBank bank, double tf_guess,
                                     std::vector<double> nodes, Settings settings)
    : QnnCollocationSystem(std::move(bank),
                           tfc::TimeMorph(cfg.t0, tf_guess, settings.tau0, settings.tauf),
                           std::move(nodes),
                           collocation_options(settings)),
      model_(std::move(model)),
      cfg_(std::move(cfg)),
      settings_(settings) {
  cfg_.validate();
  if (cfg_.rho_i.size() != model_.dim()) {
    throw DimensionMismatch("PmpResidualSystem: boundary states do not match the model");
  }
  const Eigen::Index dim = model_.dim();
  const auto m = static_cast<Eigen::Index>(model_.n_controls());
  add_unknown(dim, {{tfc::Location::Initial, cfg_.rho_i}, {tfc::Location::Final, cfg_.rho_f}});
  add_unknown(dim, {{tfc::Location::Final, cfg_.lambda_f}});
  add_unknown(m, {});
  add_unknown(m, {});
  add_unknown(m, {});
}

NodeValues PmpResidualSystem::values_at(double tau) {
  refresh_if_needed();
  const tfc::ExprValue rho = expr(kRho).eval(tau);
  const tfc::ExprValue lam = expr(kLambda).eval(tau);
  return NodeValues{rho.value,
                    rho.dvalue_dt,
                    lam.value,
                    lam.dvalue_dt,
                    expr(kU).eval(tau).value,
                    expr(kNu).eval(tau).value,
                    expr(kBeta).eval(tau).value};
}

double PmpResidualSystem::hamiltonian_at(double tau) {
  const NodeValues v = values_at(tau);
  return hamiltonian(v.rho, v.lambda, v.u, v.nu, v.beta, cfg_, model_);
}

Eigen::VectorXd PmpResidualSystem::residuals() {
  refresh_if_needed();
  const Eigen::Index dim = model_.dim();
  const auto m = static_cast<Eigen::Index>(model_.n_controls());
  const Eigen::Index stride = 2 * dim + 3 * m;
  const auto& taus = nodes();
  Eigen::VectorXd out(residual_length(taus.size(), dim, model_.n_controls()));
  const ResidualWeights& w = settings_.weights;
  std::vector<NodeResiduals> per_node(taus.size());
  parallel_for(taus.size(), [&](std::size_t l) {
    per_node[l] = node_residuals(values_at(taus[l]), cfg_, model_);
  });
  for (std::size_t l = 0; l < taus.size(); ++l) {
    const NodeResiduals& r = per_node[l];
    const Eigen::Index base = static_cast<Eigen::Index>(l) * stride;
    out.segment(base, dim) = w.rho * r.rho;
    out.segment(base + dim, dim) = w.lambda * r.lambda;
    out.segment(base + 2 * dim, m) = w.u * r.u;
    out.segment(base + 2 * dim + m, m) = w.nu * r.nu;
    out.segment(base + 2 * dim + 2 * m, m) = w.phi * r.phi;
  }
  out(out.size() - 1) = w.hamiltonian * (hamiltonian_at(taus.back()) + cfg_.gamma);
  return out;
}

LossBreakdown PmpResidualSystem::breakdown() {
  const Eigen::VectorXd r = residuals();
  const Eigen::Index dim = model_.dim();
  const auto m = static_cast<Eigen::Index>(model_.n_controls());
  const Eigen::Index stride = 2 * dim + 3 * m;
  LossBreakdown b;
  double rho = 0.0, lam = 0.0, u = 0.0, nu = 0.0, phi = 0.0;
  for (std::size_t l = 0; l < nodes().size(); ++l) {
    const Eigen::Index base = static_cast<Eigen::Index>(l) * stride;
    rho += r.segment(base, dim).squaredNorm();
    lam += r.segment(base + dim, dim).squaredNorm();
    u += r.segment(base + 2 * dim, m).squaredNorm();
    nu += r.segment(base + 2 * dim + m, m).squaredNorm();
    phi += r.segment(base + 2 * dim + 2 * m, m).squaredNorm();
  }
  b.l2_total = r.norm();
  b.l2_rho = std::sqrt(rho);
  b.l2_lambda = std::sqrt(lam);
  b.l2_u = std::sqrt(u);
  b.l2_nu = std::sqrt(nu);
  b.l2_phi = std::sqrt(phi);
  b.xi_h = r(r.size() - 1);
  b.c_map = morph().c_map();
  b.tf = morph().tf();
  return b;
}

}  // namespace cvqoc::pmp
