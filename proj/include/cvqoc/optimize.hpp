#pragma once

#include "cvqoc/collocation.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cvqoc::optimize {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
/// Called after every accepted iterate with (iteration, z, loss).
using IterateObserver = std::function<void(int, const Eigen::VectorXd&, double)>;

struct SolveReport {
  int iterations = 0;
  double final_loss = 0.0;
  std::vector<double> loss_history;
  bool converged = false;
  double tolerance_used = 0.0;
  double wall_time = 0.0;  // seconds
  Eigen::VectorXd solution;
  std::string diagnostic;
};

/// Default per-coordinate difference step max(1e-6, 1e-6 |z_k|).
double fd_step(double z);

/// Central-difference Jacobian; `h` overrides the per-coordinate default.
/// Throws NumericalError naming the coordinate if a residual is non-finite.
Eigen::MatrixXd jacobian_fd(const ResidualFn& residual, const Eigen::VectorXd& z,
                            std::optional<double> h = std::nullopt);

/// Central-difference gradient of a scalar function.
Eigen::VectorXd gradient_fd(const ScalarFn& loss, const Eigen::VectorXd& z,
                            std::optional<double> h = std::nullopt);

struct GaussNewtonOptions {
  double tol = 1e-6;          // on the L2 norm of the residual vector
  int max_iter = 50;
  double damping = 1e-8;      // Levenberg-Marquardt lambda
  int max_backtracks = 8;
  double max_damping = 1e10;
  double min_relative_decrease = 1e-12;
  std::optional<double> fd_h;
};

/// Damped Gauss-Newton iteration with step halving and damping adaptation
/// (x10 after a fully rejected step, /10 after an accepted one).
class GaussNewton {
 public:
  enum class Outcome { Accepted, Converged, Stalled, Singular, NonFinite };

  GaussNewton(ResidualFn residual, GaussNewtonOptions options);

  /// One iteration from z; on Accepted, z and loss() hold the new iterate.
  Outcome step(Eigen::VectorXd& z);

  /// L2 norm of the residual at the current iterate (after the first step call).
  double loss() const { return loss_; }
  double damping() const { return damping_; }
  const std::string& diagnostic() const { return diagnostic_; }
  const GaussNewtonOptions& options() const { return options_; }

 private:
  ResidualFn residual_;
  GaussNewtonOptions options_;
  double damping_;
  double loss_ = 0.0;
  std::string diagnostic_;
};

SolveReport gauss_newton(const ResidualFn& residual, const Eigen::VectorXd& z0,
                         const GaussNewtonOptions& options, const IterateObserver& observer = {});

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int max_epochs = 1000;
  double tol = 1e-6;
  /// Reject epochs that increase the loss and halve the learning rate.
  bool monotone = false;
  std::optional<double> fd_h;
};

/// Adam with bias correction and finite-difference gradients.
class Adam {
 public:
  enum class Outcome { Accepted, Rejected, NonFinite };

  Adam(ScalarFn loss, AdamOptions options);

  /// One epoch from z whose current loss is `current`; on Accepted, z and
  /// `current` are updated.
  Outcome step(Eigen::VectorXd& z, double& current);

  double learning_rate() const { return lr_; }
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  ScalarFn loss_;
  AdamOptions options_;
  double lr_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
  std::string diagnostic_;
};

SolveReport adam(const ScalarFn& loss, const Eigen::VectorXd& z0, const AdamOptions& options,
                 const IterateObserver& observer = {});

enum class TrainMode { XiOnly, ThetaOnly, Joint };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

struct TrainSchedule {
  TrainMode mode = TrainMode::XiOnly;
  double tol = 1e-6;           // on the L2 norm of the full residual vector
  int max_iter = 50;           // Gauss-Newton step budget
  int max_epochs = 200;        // Adam epoch budget
  double damping = 1e-8;
  double lr = 0.01;
  int gn_steps_per_round = 3;  // Joint: R
  int adam_epochs_per_round = 25;  // Joint: S
};

/// Called after the initial evaluation (epoch 0) and after every accepted
/// update; the system holds the accepted decision when this runs.
using EpochObserver = std::function<void(int epoch, QnnCollocationSystem& system)>;

/// XiOnly: Gauss-Newton over xi (and c_map when free). ThetaOnly: Adam over
/// the circuit parameters on the mean-square residual. Joint: alternates R
/// Gauss-Newton steps with S Adam epochs. loss_history is always the L2 norm
/// of the residual vector.
SolveReport train(QnnCollocationSystem& system, const TrainSchedule& schedule,
                  const EpochObserver& observer = {});

}  // namespace cvqoc::optimize
