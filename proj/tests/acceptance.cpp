// Acceptance gate: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include "cvqoc/errors.hpp"
#include "cvqoc/experiment.hpp"
#include "cvqoc/fock.hpp"
#include "cvqoc/lindblad.hpp"
#include "cvqoc/optimize.hpp"
#include "cvqoc/pmp.hpp"
#include "cvqoc/tfc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>

using namespace cvqoc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void run(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s %2d %s: %s; runtime %.2fs (limit %.0fs)\n", pass ? "PASS" : "FAIL", id, title,
              o.detail.c_str(), secs, budget_s);
  std::fflush(stdout);
}

Outcome gate_algebra() {
  double kerr_err = 0.0;
  for (double kappa : {0.1, 1.0}) {
    const fock::FockOperator k = fock::gate_matrix(fock::Kerr{kappa}, 20);
    for (int n = 0; n < 20; ++n) {
      const fock::Complex expected = std::exp(fock::Complex(0.0, kappa * n * n));
      kerr_err = std::max(kerr_err, std::abs(k.entries()(n, n) - expected));
    }
    kerr_err = std::max(kerr_err, (k.entries() - Eigen::MatrixXcd(k.entries().diagonal().asDiagonal()))
                                      .cwiseAbs()
                                      .maxCoeff());
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> radius(0.0, 1.0), phase(0.0, 2.0 * M_PI);
  double inv_err = 0.0;
  const int block = 10;
  for (int i = 0; i < 10; ++i) {
    const fock::Complex a = std::polar(radius(rng), phase(rng));
    const Eigen::MatrixXcd prod = fock::gate_matrix(fock::Displacement{a}, 20).entries() *
                                  fock::gate_matrix(fock::Displacement{-a}, 20).entries();
    inv_err = std::max(inv_err, (prod.topLeftCorner(block, block) -
                                 Eigen::MatrixXcd::Identity(block, block))
                                    .cwiseAbs()
                                    .maxCoeff());
  }
  return {kerr_err < 1e-12 && inv_err < 1e-6,
          "Kerr diagonal error " + fmt("%.2e", kerr_err) + ", D(a)D(-a) block error " +
              fmt("%.2e", inv_err)};
}

Outcome quadrature() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> radius(0.0, 1.0), phase(0.0, 2.0 * M_PI);
  const fock::FockOperator x = fock::quadrature_x(30);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const fock::Complex a = std::polar(radius(rng), phase(rng));
    const fock::FockVector psi =
        fock::apply(fock::gate_matrix(fock::Displacement{a}, 30), fock::FockVector::vacuum(30));
    worst = std::max(worst, std::abs(fock::expectation(x, psi) - std::sqrt(2.0) * a.real()));
  }
  return {worst < 1e-6, "max |<x> - sqrt2 Re a| = " + fmt("%.2e", worst)};
}

Outcome tfc_exactness() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  const tfc::TimeMorph m(0.0, 2.5);
  double boundary = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd c = Eigen::MatrixXd::NullaryExpr(3, 5, [&] { return n(rng); });
    tfc::FreeFunction f;
    f.dim = 3;
    f.eval = [c](double tau) {
      tfc::FreeValue v{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
      for (Eigen::Index k = 0; k < c.cols(); ++k) {
        v.value += c.col(k) * std::pow(tau, static_cast<double>(k));
        if (k > 0) v.dvalue_dtau += c.col(k) * (k * std::pow(tau, k - 1.0));
      }
      return v;
    };
    f.version = [] { return std::uint64_t{1}; };
    const Eigen::VectorXd yi = Eigen::VectorXd::NullaryExpr(3, [&] { return n(rng); });
    const Eigen::VectorXd yf = Eigen::VectorXd::NullaryExpr(3, [&] { return n(rng); });
    tfc::ConstrainedExpression e(f, {{tfc::Location::Initial, yi}, {tfc::Location::Final, yf}}, m);
    e.refresh();
    boundary = std::max(boundary, (e.eval(m.tau0()).value - yi).cwiseAbs().maxCoeff());
    boundary = std::max(boundary, (e.eval(m.tauf()).value - yf).cwiseAbs().maxCoeff());
  }
  double identity = 0.0;
  std::uniform_real_distribution<double> tau(m.tau0(), m.tauf());
  for (int i = 0; i < 1000; ++i) {
    const double t = tau(rng);
    identity = std::max(identity, std::abs(tfc::omega(1, t, m) + tfc::omega(2, t, m) - 1.0));
  }
  for (double t : {m.tau0(), m.tauf()}) {
    const bool start = t == m.tau0();
    identity = std::max(identity, std::abs(tfc::omega(1, t, m) - (start ? 1.0 : 0.0)));
    identity = std::max(identity, std::abs(tfc::omega(2, t, m) - (start ? 0.0 : 1.0)));
    identity = std::max(identity, std::abs(tfc::omega_prime(1, t, m)));
    identity = std::max(identity, std::abs(tfc::omega_prime(2, t, m)));
  }
  return {boundary < 1e-12 && identity <= 1e-14,
          "boundary error " + fmt("%.2e", boundary) + ", switching identities " + fmt("%.2e", identity)};
}

Outcome superoperator() {
  const lindblad::TwoLevelParams p{0.1, 0.3, 1.0, 2.0};
  double diff = 0.0, rows = 0.0;
  for (double u : {-2.0, 0.0, 2.0}) {
    const Eigen::MatrixXd generic =
        lindblad::lindblad_vectorize(lindblad::two_level_hamiltonian(p, u), lindblad::two_level_jumps(p));
    const Eigen::Matrix4d l = lindblad::two_level_generator(p, u);
    diff = std::max(diff, (generic - l).cwiseAbs().maxCoeff());
    rows = std::max(rows, (l.row(0) + l.row(1)).cwiseAbs().maxCoeff());
  }
  return {diff < 1e-12 && rows == 0.0,
          "max |generic - displayed| = " + fmt("%.2e", diff) + ", population row sum " + fmt("%.1e", rows)};
}

Outcome relaxation() {
  const auto model = lindblad::SuperOperatorModel::two_level(lindblad::TwoLevelParams{0.1, 0.3, 0.0, 0.0});
  const auto tr = lindblad::propagate_rk4(model, Eigen::Vector4d(0.0, 1.0, 0.0, 0.0),
                                          [](double) { return Eigen::VectorXd::Zero(1); }, 0.0, 60.0, 600);
  const Eigen::VectorXd& x = tr.x.back();
  const double err = std::max(std::abs(x(0) - 0.75), std::abs(x(1) - 0.25));
  return {err < 1e-4, "populations at t=60 (" + fmt("%.6f", x(0)) + ", " + fmt("%.6f", x(1)) +
                          "), error " + fmt("%.2e", err)};
}

std::vector<double> benchmark_history;
std::vector<double> qubit_history;
std::unique_ptr<experiment::ExperimentResult> qubit_result;

Outcome linear_ode() {
  const experiment::ExperimentResult r =
      experiment::run_experiment(experiment::preset("linear_ode_benchmark"), false);
  benchmark_history = r.report.loss_history;
  const double err = r.report_json.at("max_abs_error").get<double>();
  return {err < 1e-2 && r.report.converged,
          "max |y - exp(-2t)| = " + fmt("%.2e", err) + " on " +
              std::to_string(r.trajectory.rows.size()) + " points, converged=" +
              (r.report.converged ? "true" : "false") + ", L2 " + fmt("%.3e", r.report.final_loss)};
}

Outcome two_level() {
  qubit_result = std::make_unique<experiment::ExperimentResult>(
      experiment::run_experiment(experiment::preset("two_level_ground_to_excited"), false));
  const auto& r = *qubit_result;
  qubit_history = r.report.loss_history;
  const auto& j = r.report_json;
  const double l2 = r.report.final_loss;
  const double rk4 = j.at("terminal").at("rk4_error").get<double>();
  const double drift = j.at("trace_drift_rk4").get<double>();
  const double umin = j.at("u_min").get<double>(), umax = j.at("u_max").get<double>();
  const double xih = std::abs(j.at("hamiltonian_residual").get<double>());
  const bool a = l2 < 1e-2, b = rk4 < 5e-2, c = drift < 1e-9, d = umin >= -2.0 && umax <= 2.0,
             e = xih < 5e-2;
  auto mark = [](bool ok) { return ok ? "ok" : "fail"; };
  return {a && b && c && d && e,
          std::string("(a) L2 ") + fmt("%.3e", l2) + " " + mark(a) + ", (b) RK4 terminal error " +
              fmt("%.3e", rk4) + " " + mark(b) + ", (c) trace drift " + fmt("%.1e", drift) + " " +
              mark(c) + ", (d) u in [" + fmt("%.3f", umin) + ", " + fmt("%.3f", umax) + "] " + mark(d) +
              ", (e) |H(tf)+Gamma| " + fmt("%.3e", xih) + " " + mark(e)};
}

Outcome optimality_consistency() {
  if (!qubit_result) return {false, "two-level run unavailable"};
  auto* sys = dynamic_cast<pmp::PmpResidualSystem*>(qubit_result->system.get());
  if (sys == nullptr) return {false, "unexpected system type"};
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> pick(0, sys->nodes().size() - 1);
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const pmp::NodeValues v = sys->values_at(sys->nodes()[pick(rng)]);
    const pmp::NodeResiduals r = pmp::node_residuals(v, sys->config(), sys->model());
    const auto H = [&](double du, double dnu) {
      return pmp::hamiltonian(v.rho, v.lambda, v.u + Eigen::VectorXd::Constant(1, du),
                              v.nu + Eigen::VectorXd::Constant(1, dnu), v.beta, sys->config(),
                              sys->model());
    };
    worst = std::max(worst, std::abs(r.u(0) - (H(h, 0) - H(-h, 0)) / (2 * h)));
    worst = std::max(worst, std::abs(r.nu(0) - (H(0, h) - H(0, -h)) / (2 * h)));
  }
  return {worst < 1e-6, "max |Xi - dH/d(u,nu)| over 10 nodes = " + fmt("%.2e", worst)};
}

Outcome optimizer_oracles() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(30, 8, [&] { return n(rng); });
  const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(30, [&] { return n(rng); });
  const Eigen::VectorXd exact = a.colPivHouseholderQr().solve(b);
  optimize::GaussNewtonOptions gopts;
  gopts.damping = 0.0;
  optimize::GaussNewton gn([&](const Eigen::VectorXd& z) { return Eigen::VectorXd(a * z - b); }, gopts);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(8);
  const bool accepted = gn.step(z) == optimize::GaussNewton::Outcome::Accepted;
  const double gn_err = (z - exact).cwiseAbs().maxCoeff();

  const Eigen::VectorXd target = Eigen::VectorXd::NullaryExpr(5, [&] { return n(rng); });
  const Eigen::VectorXd d = (Eigen::VectorXd(5) << 1.0, 0.5, 2.0, 3.0, 0.25).finished();
  optimize::AdamOptions aopts;
  aopts.lr = 0.05;
  aopts.max_epochs = 2000;
  aopts.tol = 1e-14;
  const optimize::SolveReport r = optimize::adam(
      [&](const Eigen::VectorXd& x) { return (x - target).cwiseProduct(d).dot(x - target); },
      Eigen::VectorXd::Zero(5), aopts);
  const double adam_err = (r.solution - target).cwiseAbs().maxCoeff();
  return {accepted && gn_err < 1e-10 && adam_err < 1e-3 && r.iterations <= 2000,
          "Gauss-Newton one-step error " + fmt("%.2e", gn_err) + ", Adam error " + fmt("%.2e", adam_err) +
              " after " + std::to_string(r.iterations) + " epochs"};
}

Outcome three_level() {
  const experiment::ExperimentResult r =
      experiment::run_experiment(experiment::preset("three_level_pop_inversion"), false);
  const double drift = r.report_json.at("trace_drift_rk4").get<double>();
  const double boundary = r.report_json.at("boundary_error").get<double>();
  return {drift < 1e-9 && boundary < 1e-10,
          "trace drift " + fmt("%.1e", drift) + ", boundary error " + fmt("%.1e", boundary) +
              " (not gated: L2 " + fmt("%.3e", r.report.final_loss) + ", RK4 terminal error " +
              fmt("%.3e", r.report_json.at("terminal").at("rk4_error").get<double>()) + ")"};
}

Outcome reproducibility() {
  const auto b = experiment::run_experiment(experiment::preset("linear_ode_benchmark"), false);
  const auto q = experiment::run_experiment(experiment::preset("two_level_ground_to_excited"), false);
  const bool same_b = !benchmark_history.empty() && b.report.loss_history == benchmark_history;
  const bool same_q = !qubit_history.empty() && q.report.loss_history == qubit_history;
  return {same_b && same_q, std::string("benchmark history ") + (same_b ? "identical" : "differs") +
                                " (" + std::to_string(b.report.loss_history.size()) +
                                " entries), two-level history " + (same_q ? "identical" : "differs") +
                                " (" + std::to_string(q.report.loss_history.size()) + " entries)"};
}

}  // namespace

int main() {
  run(1, "gate algebra", 1.0, gate_algebra);
  run(2, "quadrature convention", 5.0, quadrature);
  run(3, "TFC exactness", 1.0, tfc_exactness);
  run(4, "superoperator fidelity", 1.0, superoperator);
  run(5, "relaxation oracle", 1.0, relaxation);
  run(6, "linear-ODE benchmark", 300.0, linear_ode);
  run(7, "two-level QOC end-to-end", 1800.0, two_level);
  run(8, "optimality-condition consistency", 60.0, optimality_consistency);
  run(9, "optimizer unit oracles", 60.0, optimizer_oracles);
  run(10, "three-level smoke", 1800.0, three_level);
  run(11, "reproducibility", 1800.0, reproducibility);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
