#include "cvqoc/csv.hpp"
#include "cvqoc/cvqnn.hpp"
#include "cvqoc/errors.hpp"
#include "cvqoc/experiment.hpp"
#include "cvqoc/fock.hpp"
#include "cvqoc/lindblad.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

namespace {

using namespace cvqoc;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": JSON syntax error: " + e.what());
  }
}

int run_gates(const std::string& kind, double param, double imag, int cutoff, int mode) {
  fock::GateSpec spec;
  if (kind == "displacement") {
    spec = fock::Displacement{fock::Complex(param, imag)};
  } else if (kind == "rotation") {
    spec = fock::Rotation{param};
  } else if (kind == "squeeze") {
    spec = fock::Squeeze{param};
  } else if (kind == "beamsplitter") {
    spec = fock::BeamSplitter{param, mode};
  } else if (kind == "kerr") {
    spec = fock::Kerr{param};
  } else {
    throw ConfigError("--kind: unknown gate '" + kind + "'");
  }
  const fock::FockOperator op = fock::gate_matrix(spec, cutoff);
  csv::Table table;
  for (Eigen::Index c = 0; c < op.dim(); ++c) {
    table.header.push_back("re" + std::to_string(c));
    table.header.push_back("im" + std::to_string(c));
  }
  for (Eigen::Index r = 0; r < op.dim(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < op.dim(); ++c) {
      row.push_back(op.entries()(r, c).real());
      row.push_back(op.entries()(r, c).imag());
    }
    table.rows.push_back(std::move(row));
  }
  std::cout << csv::format(table);
  return kExitOk;
}

cvqnn::QnnBank bank_from_file(const std::string& path) {
  const json doc = read_json(path);
  if (doc.is_object() && doc.contains("bank")) {
    return experiment::bank_from_json(doc.at("bank"));
  }
  return experiment::make_bank(experiment::load_config(path));
}

int run_qnn_eval(const std::string& config, const std::vector<double>& taus) {
  const cvqnn::QnnBank bank = bank_from_file(config);
  csv::Table table;
  table.header.push_back("tau");
  for (std::size_t l = 0; l < bank.size(); ++l) table.header.push_back("sigma" + std::to_string(l));
  for (double tau : taus) {
    const Eigen::VectorXd s = cvqnn::forward(bank, tau);
    std::vector<double> row{tau};
    row.insert(row.end(), s.data(), s.data() + s.size());
    table.rows.push_back(std::move(row));
  }
  std::cout << csv::format(table);
  return kExitOk;
}

// Piecewise-linear interpolation of the control columns over t.
lindblad::ControlSignal interpolate_controls(const csv::Table& table,
                                             const std::vector<std::string>& names) {
  const std::vector<double> t = table.column_values("t");
  std::vector<std::vector<double>> cols;
  for (const auto& n : names) cols.push_back(table.column_values(n));
  return [t, cols](double s) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(cols.size()));
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - t.begin()), 1,
                                                    t.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = std::clamp((s - t[lo]) / (t[hi] - t[lo]), 0.0, 1.0);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      u(static_cast<Eigen::Index>(k)) = (1.0 - w) * cols[k][lo] + w * cols[k][hi];
    }
    return u;
  };
}

int run_propagate(const std::string& system, const std::string& config_path,
                  const std::string& control_path, int substeps) {
  const experiment::ExperimentConfig cfg = experiment::load_config(config_path);
  if (experiment::to_string(cfg.system) != system) {
    throw ConfigError("--system " + system + " does not match the config system " +
                      experiment::to_string(cfg.system));
  }
  if (cfg.system == experiment::SystemKind::LinearOde) {
    throw ConfigError("--system: propagate supports two-level and three-level only");
  }
  if (substeps < 1) throw ConfigError("--substeps: must be at least 1");
  const lindblad::SuperOperatorModel model =
      cfg.system == experiment::SystemKind::TwoLevel
          ? lindblad::SuperOperatorModel::two_level(cfg.two_level)
          : lindblad::SuperOperatorModel::three_level(cfg.three_level, cfg.jumps);
  const csv::Table control = csv::read(control_path);
  std::vector<std::string> names{"u"};
  if (model.n_controls() == 2) names.push_back("u_s");
  for (const auto& n : names) control.column(n);
  const std::vector<double> t = control.column_values("t");
  if (t.size() < 2) throw ConfigError(control_path + ": need at least two control samples");
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) throw ConfigError(control_path + ": t must be strictly increasing");
  }
  const auto u_of_t = interpolate_controls(control, names);
  const int steps = static_cast<int>(t.size() - 1) * substeps;
  const lindblad::Trajectory traj =
      lindblad::propagate_rk4(model, cfg.ocp.problem.rho_i, u_of_t, t.front(), t.back(),
                              std::max(steps, 10));
  csv::Table out;
  out.header.push_back("t");
  for (Eigen::Index i = 1; i <= model.dim(); ++i) out.header.push_back("x" + std::to_string(i));
  out.header.push_back("trace");
  const std::size_t stride = steps >= 10 ? static_cast<std::size_t>(substeps) : 1;
  for (std::size_t k = 0; k < traj.t.size(); k += stride) {
    std::vector<double> row{traj.t[k]};
    row.insert(row.end(), traj.x[k].data(), traj.x[k].data() + traj.x[k].size());
    row.push_back(lindblad::trace(traj.x[k]));
    out.rows.push_back(std::move(row));
  }
  std::cout << csv::format(out);
  return kExitOk;
}

int run_solve(const std::string& config_path, const std::string& preset, const std::string& out,
              const std::string& mode) {
  experiment::ExperimentConfig cfg =
      preset.empty() ? experiment::load_config(config_path) : experiment::preset(preset);
  if (!out.empty()) cfg.output.dir = out;
  if (!mode.empty()) {
    try {
      cfg.train.mode = optimize::train_mode_from_string(mode);
    } catch (const Error& e) {
      throw ConfigError(std::string("--mode: ") + e.what());
    }
  }
  const experiment::ExperimentResult r = experiment::run_experiment(cfg);
  std::printf("%s: converged=%s final_loss=%.6e iterations=%d artifacts=%s\n",
              cfg.name.empty() ? experiment::to_string(cfg.system).c_str() : cfg.name.c_str(),
              r.report.converged ? "true" : "false", r.report.final_loss, r.report.iterations,
              cfg.output.dir.c_str());
  if (!r.report.diagnostic.empty()) std::printf("diagnostic: %s\n", r.report.diagnostic.c_str());
  return kExitOk;
}

int run_verify(const std::string& trajectory, const std::string& reference, double tol) {
  const experiment::VerifySummary s =
      experiment::verify(csv::read(trajectory), csv::read(reference), tol);
  for (std::size_t k = 0; k < s.components.size(); ++k) {
    std::printf("%s max_deviation=%.6e\n", s.components[k].c_str(), s.max_deviation[k]);
  }
  std::printf("trace_drift=%.6e\nterminal_error=%.6e\ntol=%.3e\n%s\n", s.trace_drift,
              s.terminal_error, s.tol, s.pass ? "PASS" : "FAIL");
  return s.pass ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum optimal control with TFC and simulated CV quantum neural networks"};
  app.require_subcommand(1);

  std::string kind;
  double param = 0.0, imag = 0.0;
  int cutoff = fock::kTrainingCutoff, bs_mode = 0;
  auto* gates = app.add_subcommand("gates", "Dump a gate matrix as CSV (re/im column pairs)");
  gates->add_option("--kind", kind, "displacement|rotation|squeeze|beamsplitter|kerr")->required();
  gates->add_option("--param", param, "Gate parameter (real part for displacement)")->required();
  gates->add_option("--imag", imag, "Imaginary part of the displacement amplitude");
  gates->add_option("--cutoff", cutoff, "Fock cutoff D");

  std::string config;
  std::vector<double> taus;
  auto* qnn = app.add_subcommand("qnn-eval", "Print the bank features sigma(tau) as CSV");
  qnn->add_option("--config", config, "Experiment config or params.json")->required();
  qnn->add_option("--tau", taus, "Input value(s)")->required();

  std::string system, control;
  int substeps = 10;
  auto* prop = app.add_subcommand("propagate", "RK4 propagation under a control CSV");
  prop->add_option("--system", system, "two-level|three-level")->required();
  prop->add_option("--config", config, "Experiment config")->required();
  prop->add_option("--control", control, "CSV with columns t,u[,u_s]")->required();
  prop->add_option("--substeps", substeps, "RK4 steps per control interval");

  std::string preset, out, mode;
  auto* solve = app.add_subcommand("solve", "Train an experiment and write its artifacts");
  auto* cfg_opt = solve->add_option("--config", config, "Experiment config");
  auto* preset_opt = solve->add_option("--preset", preset, "Built-in preset name");
  cfg_opt->excludes(preset_opt);
  solve->add_option("--out", out, "Output directory (overrides output.dir)");
  solve->add_option("--mode", mode, "xi|theta|joint (overrides train.mode)");

  std::string trajectory, reference;
  double tol = 5e-2;
  auto* ver = app.add_subcommand("verify", "Compare a trajectory against a reference");
  ver->add_option("--trajectory", trajectory, "trajectory.csv")->required();
  ver->add_option("--reference", reference, "verify.csv")->required();
  ver->add_option("--tol", tol, "Pass threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gates) return run_gates(kind, param, imag, cutoff, bs_mode);
    if (*qnn) return run_qnn_eval(config, taus);
    if (*prop) return run_propagate(system, config, control, substeps);
    if (*solve) {
      if (config.empty() && preset.empty()) {
        throw ConfigError("solve: one of --config or --preset is required");
      }
      return run_solve(config, preset, out, mode);
    }
    if (*ver) return run_verify(trajectory, reference, tol);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidCutoff& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
