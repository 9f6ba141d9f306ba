#pragma once

// Experiment configuration, presets and the end-to-end driver that trains a
// collocation system and writes its artifacts.

#include "cvqoc/collocation.hpp"
#include "cvqoc/csv.hpp"
#include "cvqoc/lindblad.hpp"
#include "cvqoc/optimize.hpp"
#include "cvqoc/pmp.hpp"

#include <cstdint>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

namespace cvqoc::experiment {

enum class SystemKind { TwoLevel, ThreeLevel, LinearOde };

std::string to_string(SystemKind kind);

struct QnnSettings {
  int circuits = 4;
  int depth = 2;
  int cutoff = fock::kTrainingCutoff;
  std::uint64_t seed = 0;  // mandatory in config files
  double active_std = 0.05;
};

struct TfcSettings {
  int nodes = 20;
  double tau0 = tfc::kDefaultTau0;
  double tauf = tfc::kDefaultTauF;
  double h_tau = 0.0;  // <= 0: 1e-4 of the tau width
};

struct BenchmarkSettings {
  double rate = -2.0;
  double y0 = 1.0;
  double t0 = 0.0;
  double tf = 1.0;
};

struct OcpSettings {
  pmp::OcpConfig problem;  // lambda_f is always zero and not configurable
  double tf_guess = 3.0;
  bool free_final_time = true;
  double c_map_min = 0.05;
  double c_map_max = 20.0;
  bool terminal_weight = false;  // sqrt(N) weight on the terminal row
};

struct OutputSettings {
  std::string dir = "out";
  int samples = 200;
  int rk4_substeps = 10;
};

struct ExperimentConfig {
  std::string name;
  SystemKind system = SystemKind::TwoLevel;
  lindblad::TwoLevelParams two_level;
  lindblad::ThreeLevelParams three_level;
  std::vector<lindblad::JumpOperator> jumps;
  BenchmarkSettings benchmark;
  OcpSettings ocp;
  QnnSettings qnn;
  TfcSettings tfc;
  optimize::TrainSchedule train;
  OutputSettings output;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Real density-vector dimension of the controlled system (1 for the benchmark).
  Eigen::Index state_dim() const;
};

/// Strict parse: unknown keys, wrong types and missing required keys
/// (`system`, `qnn.seed`, and `ocp.rho_i` / `ocp.rho_f` for control systems)
/// raise ConfigError with the key path.
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Parses a file; JSON syntax errors are reported with line and column.
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// linear_ode_benchmark, two_level_ground_to_excited, two_level_to_superposition,
/// three_level_pop_inversion.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

nlohmann::json bank_to_json(const cvqnn::QnnBank& bank);
cvqnn::QnnBank bank_from_json(const nlohmann::json& doc);

/// Bank drawn from the config's qnn section.
cvqnn::QnnBank make_bank(const ExperimentConfig& config);
/// Untrained system for the config (PmpResidualSystem or LinearOdeSystem).
std::unique_ptr<QnnCollocationSystem> make_system(const ExperimentConfig& config);

struct ExperimentResult {
  optimize::SolveReport report;
  nlohmann::json report_json;
  csv::Table trajectory;
  csv::Table verification;
  std::unique_ptr<QnnCollocationSystem> system;
};

/// Trains the configured system and, when `write_files`, writes trajectory.csv,
/// verify.csv, train.jsonl, report.json and params.json into config.output.dir.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

struct VerifySummary {
  std::vector<std::string> components;
  std::vector<double> max_deviation;
  double trace_drift = 0.0;
  double terminal_error = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Compares the x* columns of two trajectories on the same t grid.
/// Throws ConfigError on grid mismatch.
VerifySummary verify(const csv::Table& trajectory, const csv::Table& reference, double tol);

}  // namespace cvqoc::experiment
