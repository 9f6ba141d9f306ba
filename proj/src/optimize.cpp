#include "cvqoc/optimize.hpp"

#include "cvqoc/errors.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <string>

namespace cvqoc::optimize {

namespace {

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double step_for(double z, const std::optional<double>& h) {
  if (h) {
    if (!(*h > 0.0)) {
      throw InvalidParameter("finite-difference step must be positive");
    }
    return *h;
  }
  return fd_step(z);
}

}  // namespace

double fd_step(double z) { return std::max(1e-6, 1e-6 * std::abs(z)); }

Eigen::MatrixXd jacobian_fd(const ResidualFn& residual, const Eigen::VectorXd& z,
                            std::optional<double> h) {
  Eigen::MatrixXd jac;
  Eigen::VectorXd probe = z;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double hk = step_for(z(k), h);
    probe(k) = z(k) + hk;
    const Eigen::VectorXd plus = residual(probe);
    probe(k) = z(k) - hk;
    const Eigen::VectorXd minus = residual(probe);
    probe(k) = z(k);
    if (!plus.allFinite() || !minus.allFinite()) {
      throw NumericalError("jacobian_fd: non-finite residual at coordinate " + std::to_string(k));
    }
    if (k == 0) {
      jac.resize(plus.size(), z.size());
    }
    jac.col(k) = (plus - minus) / (2.0 * hk);
  }
  if (z.size() == 0) {
    jac.resize(residual(z).size(), 0);
  }
  return jac;
}

Eigen::VectorXd gradient_fd(const ScalarFn& loss, const Eigen::VectorXd& z,
                            std::optional<double> h) {
  Eigen::VectorXd grad(z.size());
  Eigen::VectorXd probe = z;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double hk = step_for(z(k), h);
    probe(k) = z(k) + hk;
    const double plus = loss(probe);
    probe(k) = z(k) - hk;
    const double minus = loss(probe);
    probe(k) = z(k);
    grad(k) = (plus - minus) / (2.0 * hk);
  }
  return grad;
}

GaussNewton::GaussNewton(ResidualFn residual, GaussNewtonOptions options)
    : residual_(std::move(residual)), options_(options), damping_(options.damping) {
  if (!(options_.tol > 0.0)) {
    throw InvalidParameter("gauss_newton: tolerance must be positive");
  }
  if (!(options_.damping >= 0.0)) {
    throw InvalidParameter("gauss_newton: damping must be non-negative");
  }
}

GaussNewton::Outcome GaussNewton::step(Eigen::VectorXd& z) {
  const Eigen::VectorXd r = residual_(z);
  if (!r.allFinite()) {
    diagnostic_ = "non-finite residual at the current iterate";
    return Outcome::NonFinite;
  }
  loss_ = r.norm();
  if (loss_ < options_.tol) {
    return Outcome::Converged;
  }
  const Eigen::MatrixXd jac = jacobian_fd(residual_, z, options_.fd_h);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const Eigen::VectorXd jtr = jac.transpose() * r;

  while (true) {
    Eigen::MatrixXd normal = jtj;
    normal.diagonal().array() += damping_;
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
      if (damping_ == 0.0) {
        diagnostic_ = "singular normal equations (J^T J) without damping";
        return Outcome::Singular;
      }
      damping_ *= 10.0;
      if (damping_ > options_.max_damping) {
        diagnostic_ = "normal equations not positive definite up to the damping limit";
        return Outcome::Singular;
      }
      continue;
    }
    const Eigen::VectorXd delta = -llt.solve(jtr);
    double scale = 1.0;
    for (int b = 0; b <= options_.max_backtracks; ++b) {
      const Eigen::VectorXd trial = z + scale * delta;
      const Eigen::VectorXd rt = residual_(trial);
      const double lt = rt.allFinite() ? rt.norm() : std::numeric_limits<double>::infinity();
      if (lt < loss_) {
        if (loss_ - lt <= options_.min_relative_decrease * loss_) {
          diagnostic_ = "stalled: negligible decrease";
          return Outcome::Stalled;
        }
        z = trial;
        loss_ = lt;
        damping_ /= 10.0;
        return Outcome::Accepted;
      }
      scale *= 0.5;
    }
    if (damping_ == 0.0) {
      diagnostic_ = "stalled: no decrease along the undamped Gauss-Newton direction";
      return Outcome::Stalled;
    }
    damping_ *= 10.0;
    if (damping_ > options_.max_damping) {
      diagnostic_ = "stalled: damping limit reached without decrease";
      return Outcome::Stalled;
    }
  }
}

SolveReport gauss_newton(const ResidualFn& residual, const Eigen::VectorXd& z0,
                         const GaussNewtonOptions& options, const IterateObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  GaussNewton solver(residual, options);
  SolveReport report;
  report.tolerance_used = options.tol;
  Eigen::VectorXd z = z0;
  const Eigen::VectorXd r0 = residual(z);
  report.loss_history.push_back(r0.allFinite() ? r0.norm()
                                               : std::numeric_limits<double>::infinity());
  if (observer) {
    observer(0, z, report.loss_history.back());
  }
  while (report.iterations < options.max_iter) {
    const auto outcome = solver.step(z);
    if (outcome == GaussNewton::Outcome::Accepted) {
      ++report.iterations;
      report.loss_history.push_back(solver.loss());
      if (observer) {
        observer(report.iterations, z, solver.loss());
      }
      continue;
    }
    if (outcome != GaussNewton::Outcome::Converged) {
      report.diagnostic = solver.diagnostic();
    }
    break;
  }
  if (report.iterations >= options.max_iter && report.diagnostic.empty() &&
      !(report.loss_history.back() < options.tol)) {
    report.diagnostic = "iteration budget exhausted";
  }
  report.final_loss = report.loss_history.back();
  report.converged = report.final_loss < options.tol;
  report.solution = z;
  report.wall_time = elapsed_since(start);
  return report;
}

Adam::Adam(ScalarFn loss, AdamOptions options)
    : loss_(std::move(loss)), options_(options), lr_(options.lr) {
  if (!(options_.lr > 0.0)) {
    throw InvalidParameter("adam: learning rate must be positive");
  }
}

Adam::Outcome Adam::step(Eigen::VectorXd& z, double& current) {
  if (m_.size() != z.size()) {
    m_ = Eigen::VectorXd::Zero(z.size());
    v_ = Eigen::VectorXd::Zero(z.size());
  }
  const Eigen::VectorXd g = gradient_fd(loss_, z, options_.fd_h);
  if (!g.allFinite()) {
    diagnostic_ = "non-finite gradient";
    return Outcome::NonFinite;
  }
  ++t_;
  m_ = options_.beta1 * m_ + (1.0 - options_.beta1) * g;
  v_ = options_.beta2 * v_ + (1.0 - options_.beta2) * g.cwiseProduct(g);
  const Eigen::VectorXd m_hat = m_ / (1.0 - std::pow(options_.beta1, t_));
  const Eigen::VectorXd v_hat = v_ / (1.0 - std::pow(options_.beta2, t_));
  const Eigen::VectorXd trial =
      z - lr_ * (m_hat.array() / (v_hat.array().sqrt() + options_.eps)).matrix();
  const double value = loss_(trial);
  if (!std::isfinite(value)) {
    diagnostic_ = "non-finite loss; epoch aborted";
    return Outcome::NonFinite;
  }
  if (options_.monotone && value > current) {
    lr_ *= 0.5;
    return Outcome::Rejected;
  }
  z = trial;
  current = value;
  return Outcome::Accepted;
}

SolveReport adam(const ScalarFn& loss, const Eigen::VectorXd& z0, const AdamOptions& options,
                 const IterateObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  Adam solver(loss, options);
  SolveReport report;
  report.tolerance_used = options.tol;
  Eigen::VectorXd z = z0;
  double current = loss(z);
  if (!std::isfinite(current)) {
    throw NumericalError("adam: non-finite loss at the starting point");
  }
  report.loss_history.push_back(current);
  if (observer) {
    observer(0, z, current);
  }
  for (int epoch = 0; epoch < options.max_epochs && !(current < options.tol); ++epoch) {
    const auto outcome = solver.step(z, current);
    if (outcome == Adam::Outcome::NonFinite) {
      report.diagnostic = solver.diagnostic();
      break;
    }
    if (outcome == Adam::Outcome::Accepted) {
      ++report.iterations;
      report.loss_history.push_back(current);
      if (observer) {
        observer(report.iterations, z, current);
      }
    }
  }
  report.final_loss = report.loss_history.back();
  report.converged = report.final_loss < options.tol;
  report.solution = z;
  report.wall_time = elapsed_since(start);
  return report;
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::XiOnly:
      return "xi";
    case TrainMode::ThetaOnly:
      return "theta";
    case TrainMode::Joint:
      return "joint";
  }
  return "xi";
}

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "xi") return TrainMode::XiOnly;
  if (name == "theta") return TrainMode::ThetaOnly;
  if (name == "joint") return TrainMode::Joint;
  throw InvalidParameter("unknown train mode '" + name + "' (expected xi, theta or joint)");
}

SolveReport train(QnnCollocationSystem& system, const TrainSchedule& schedule,
                  const EpochObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  if (!(schedule.tol > 0.0)) {
    throw InvalidParameter("train: tolerance must be positive");
  }

  auto xi_residual = [&system](const Eigen::VectorXd& z) {
    system.set_xi(z);
    return system.residuals();
  };
  auto theta_mse = [&system](const Eigen::VectorXd& z) {
    system.set_theta(z);
    const Eigen::VectorXd r = system.residuals();
    return r.squaredNorm() / static_cast<double>(r.size());
  };

  GaussNewtonOptions gn_opts;
  gn_opts.tol = schedule.tol;
  gn_opts.max_iter = schedule.max_iter;
  gn_opts.damping = schedule.damping;
  AdamOptions adam_opts;
  adam_opts.lr = schedule.lr;
  adam_opts.max_epochs = schedule.max_epochs;
  adam_opts.monotone = true;
  // Adam's own stopping test is on the mean square; the L2 test happens here.
  adam_opts.tol = 0.0;

  Eigen::VectorXd xi = system.xi();
  Eigen::VectorXd theta = system.theta();
  const Eigen::Index n_rows = system.residuals().size();

  SolveReport report;
  report.tolerance_used = schedule.tol;
  auto record = [&](double l2) {
    report.loss_history.push_back(l2);
    if (observer) {
      observer(static_cast<int>(report.loss_history.size()) - 1, system);
    }
  };
  record(system.residuals().norm());

  GaussNewton gn(xi_residual, gn_opts);
  Adam ad(theta_mse, adam_opts);
  double mse = report.loss_history.back() * report.loss_history.back() / static_cast<double>(n_rows);
  int gn_used = 0;
  int adam_used = 0;

  auto gn_round = [&](int budget) -> bool {  // true if Gauss-Newton can continue
    for (int i = 0; i < budget && gn_used < schedule.max_iter; ++i) {
      const auto outcome = gn.step(xi);
      if (outcome != GaussNewton::Outcome::Accepted) {
        system.set_xi(xi);
        if (outcome != GaussNewton::Outcome::Converged) {
          report.diagnostic = gn.diagnostic();
        }
        return false;
      }
      ++gn_used;
      system.set_xi(xi);
      record(gn.loss());
      if (gn.loss() < schedule.tol) {
        return false;
      }
    }
    return gn_used < schedule.max_iter;
  };
  auto adam_round = [&](int budget) -> bool {  // true if any epoch was accepted
    bool progressed = false;
    mse = report.loss_history.back() * report.loss_history.back() / static_cast<double>(n_rows);
    for (int s = 0; s < budget && adam_used < schedule.max_epochs; ++s) {
      ++adam_used;
      const auto outcome = ad.step(theta, mse);
      system.set_theta(theta);
      if (outcome == Adam::Outcome::NonFinite) {
        report.diagnostic = ad.diagnostic();
        return progressed;
      }
      if (outcome == Adam::Outcome::Accepted) {
        progressed = true;
        record(std::sqrt(mse * static_cast<double>(n_rows)));
        if (report.loss_history.back() < schedule.tol) {
          return progressed;
        }
      }
    }
    return progressed;
  };

  switch (schedule.mode) {
    case TrainMode::XiOnly:
      gn_round(schedule.max_iter);
      break;
    case TrainMode::ThetaOnly:
      adam_round(schedule.max_epochs);
      break;
    case TrainMode::Joint: {
      while (!(report.loss_history.back() < schedule.tol)) {
        const bool gn_alive = gn_round(schedule.gn_steps_per_round);
        if (report.loss_history.back() < schedule.tol) break;
        const bool adam_alive = schedule.adam_epochs_per_round > 0 &&
                                adam_used < schedule.max_epochs &&
                                adam_round(schedule.adam_epochs_per_round);
        if (!gn_alive && !adam_alive) break;
        if (!adam_alive && schedule.adam_epochs_per_round > 0 && adam_used >= schedule.max_epochs &&
            !gn_alive) {
          break;
        }
      }
      break;
    }
  }

  report.iterations = static_cast<int>(report.loss_history.size()) - 1;
  report.final_loss = report.loss_history.back();
  report.converged = report.final_loss < schedule.tol;
  if (report.converged) {
    report.diagnostic.clear();
  } else if (report.diagnostic.empty()) {
    report.diagnostic = "budget exhausted";
  }
  Eigen::VectorXd solution(xi.size() + theta.size());
  solution << xi, theta;
  report.solution = solution;
  report.wall_time = elapsed_since(start);
  return report;
}

}  // namespace cvqoc::optimize
