#include "cvqoc/experiment.hpp"

#include "cvqoc/benchmark.hpp"
#include "cvqoc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string_view>

namespace cvqoc::experiment {

using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be consumed before finish().
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) {
      throw ConfigError(where() + "expected an object");
    }
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& raw(const std::string& key) {
    if (!doc_.contains(key)) {
      throw ConfigError("missing required key '" + key_path(key) + "'");
    }
    seen_.insert(key);
    return doc_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (has(key)) out = number(key);
  }
  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(key_path(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key_path(key) + ": must be finite");
    return d;
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(key_path(key) + ": expected an integer");
    out = v.get<int>();
  }
  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(key_path(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
    out = v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(key_path(key) + ": expected a string");
    return v.get<std::string>();
  }
  void string(const std::string& key, std::string& out) {
    if (has(key)) out = string(key);
  }

  Eigen::VectorXd vector(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(key_path(key) + "[" + std::to_string(i) + "]: expected a number");
      }
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
  }

  Eigen::MatrixXd matrix(const std::string& key, const json& v) {
    const std::string p = key_path(key);
    if (!v.is_array() || v.empty() || !v[0].is_array()) {
      throw ConfigError(p + ": expected an array of rows");
    }
    const std::size_t cols = v[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
      if (!v[r].is_array() || v[r].size() != cols) {
        throw ConfigError(p + ": ragged matrix");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        if (!v[r][c].is_number()) throw ConfigError(p + ": expected numbers");
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
      }
    }
    return m;
  }

  Section child(const std::string& key) { return Section(raw(key), key_path(key)); }

  void finish() const {
    for (const auto& item : doc_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("unknown key '" + key_path(item.key()) + "'");
      }
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

SystemKind system_from_string(const std::string& name) {
  if (name == "two-level") return SystemKind::TwoLevel;
  if (name == "three-level") return SystemKind::ThreeLevel;
  if (name == "linear-ode-benchmark") return SystemKind::LinearOde;
  throw ConfigError("system: unknown value '" + name +
                    "' (expected two-level, three-level or linear-ode-benchmark)");
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <typename Fn>
void rethrow_as_config(const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

lindblad::SuperOperatorModel make_model(const ExperimentConfig& c) {
  if (c.system == SystemKind::TwoLevel) {
    return lindblad::SuperOperatorModel::two_level(c.two_level);
  }
  return lindblad::SuperOperatorModel::three_level(c.three_level, c.jumps);
}

pmp::OcpConfig problem_with_costate(const ExperimentConfig& c) {
  pmp::OcpConfig p = c.ocp.problem;
  p.lambda_f = Eigen::VectorXd::Zero(c.state_dim());
  return p;
}

std::vector<double> control_row(const Eigen::VectorXd& u) {
  return std::vector<double>(u.data(), u.data() + u.size());
}

std::vector<std::string> state_header(Eigen::Index dim, std::size_t n_controls) {
  std::vector<std::string> h{"t"};
  for (Eigen::Index i = 1; i <= dim; ++i) h.push_back("x" + std::to_string(i));
  if (n_controls >= 1) h.push_back("u");
  if (n_controls >= 2) h.push_back("u_s");
  h.push_back("trace");
  return h;
}

double clamp_tau(double tau, const tfc::TimeMorph& m) {
  return std::clamp(tau, m.tau0(), m.tauf());
}

// Uniform t grid over the trained horizon with exact endpoint taus.
std::vector<double> sample_taus(const tfc::TimeMorph& m, int samples) {
  std::vector<double> taus(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    const double t = m.t0() + (m.tf() - m.t0()) * k / (samples - 1);
    taus[static_cast<std::size_t>(k)] = clamp_tau(m.to_tau(t), m);
  }
  taus.front() = m.tau0();
  taus.back() = m.tauf();
  return taus;
}

json breakdown_json(int epoch, const LossBreakdown& b) {
  json line;
  line["epoch"] = epoch;
  line["L2_total"] = b.l2_total;
  line["L2_rho"] = b.l2_rho;
  line["L2_lambda"] = b.l2_lambda;
  line["L2_u"] = b.l2_u;
  line["L2_nu"] = b.l2_nu;
  line["L2_phi"] = b.l2_phi;
  line["Xi_H"] = b.xi_h;
  line["c_map"] = b.c_map;
  line["tf"] = b.tf;
  return line;
}

json report_core(const ExperimentConfig& c, const optimize::SolveReport& r) {
  json j;
  j["name"] = c.name;
  j["system"] = to_string(c.system);
  j["mode"] = optimize::to_string(c.train.mode);
  j["seed"] = c.qnn.seed;
  j["iterations"] = r.iterations;
  j["final_loss"] = r.final_loss;
  j["loss_history"] = r.loss_history;
  j["converged"] = r.converged;
  j["tolerance_used"] = r.tolerance_used;
  j["wall_time"] = r.wall_time;
  j["diagnostic"] = r.diagnostic;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << text;
}

}  // namespace

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::TwoLevel:
      return "two-level";
    case SystemKind::ThreeLevel:
      return "three-level";
    case SystemKind::LinearOde:
      return "linear-ode-benchmark";
  }
  return "two-level";
}

Eigen::Index ExperimentConfig::state_dim() const {
  switch (system) {
    case SystemKind::TwoLevel:
      return 4;
    case SystemKind::ThreeLevel:
      return 9;
    case SystemKind::LinearOde:
      return 1;
  }
  return 1;
}

void ExperimentConfig::validate() const {
  if (qnn.circuits < 1 || qnn.depth < 1) {
    throw ConfigError("qnn: circuits and depth must be at least 1");
  }
  if (qnn.cutoff < 2) throw ConfigError("qnn.cutoff: must be at least 2");
  if (!(qnn.active_std >= 0.0)) throw ConfigError("qnn.active_std: must be non-negative");
  if (tfc.nodes < 2) throw ConfigError("tfc.nodes: need at least 2 nodes");
  if (!(tfc.tauf > tfc.tau0)) throw ConfigError("tfc: need tauf > tau0");
  if (!(train.tol > 0.0)) throw ConfigError("train.tol: must be positive");
  if (train.max_iter < 0 || train.max_epochs < 0) {
    throw ConfigError("train: budgets must be non-negative");
  }
  if (!(train.damping >= 0.0)) throw ConfigError("train.damping: must be non-negative");
  if (!(train.lr > 0.0)) throw ConfigError("train.lr: must be positive");
  if (train.gn_steps_per_round < 0 || train.adam_epochs_per_round < 0) {
    throw ConfigError("train: round sizes must be non-negative");
  }
  if (output.samples < 200) throw ConfigError("output.samples: must be at least 200");
  if (output.rk4_substeps < 1) throw ConfigError("output.rk4_substeps: must be at least 1");
  if (output.dir.empty()) throw ConfigError("output.dir: must not be empty");

  if (system == SystemKind::LinearOde) {
    if (!(benchmark.tf > benchmark.t0)) throw ConfigError("benchmark: need tf > t0");
    return;
  }
  if (system == SystemKind::TwoLevel) {
    rethrow_as_config("two_level", [&] { two_level.validate(); });
  } else {
    rethrow_as_config("three_level", [&] { three_level.validate(); });
    for (std::size_t k = 0; k < jumps.size(); ++k) {
      if (jumps[k].op.rows() != 3 || jumps[k].op.cols() != 3) {
        throw ConfigError("three_level.jumps[" + std::to_string(k) + "]: operator must be 3x3");
      }
      if (!(jumps[k].rate >= 0.0)) {
        throw ConfigError("three_level.jumps[" + std::to_string(k) + "].rate: must be >= 0");
      }
    }
  }
  if (ocp.problem.rho_i.size() != state_dim() || ocp.problem.rho_f.size() != state_dim()) {
    throw ConfigError("ocp: rho_i and rho_f must have " + std::to_string(state_dim()) +
                      " entries for " + to_string(system));
  }
  rethrow_as_config("ocp", [&] { problem_with_costate(*this).validate(); });
  if (!(ocp.tf_guess > 0.0)) throw ConfigError("ocp.tf_guess: must be positive");
  if (!(ocp.c_map_min > 0.0) || !(ocp.c_map_max > ocp.c_map_min)) {
    throw ConfigError("ocp: need 0 < c_map_min < c_map_max");
  }
}

ExperimentConfig parse_config(const json& doc) {
  Section root(doc, "");
  ExperimentConfig c;
  c.system = system_from_string(root.string("system"));
  root.string("name", c.name);

  const bool control = c.system != SystemKind::LinearOde;
  const auto forbid = [&](const std::string& key) {
    if (root.has(key)) {
      throw ConfigError("key '" + key + "' does not apply to system " + to_string(c.system));
    }
  };

  if (c.system == SystemKind::TwoLevel) {
    forbid("three_level");
    if (root.has("two_level")) {
      Section s = root.child("two_level");
      s.number("gamma_eg", c.two_level.gamma_eg);
      s.number("gamma_ge", c.two_level.gamma_ge);
      s.number("omega_x", c.two_level.omega_x);
      s.number("omega_z", c.two_level.omega_z);
      s.finish();
    }
  } else {
    forbid("two_level");
  }
  if (c.system == SystemKind::ThreeLevel) {
    if (root.has("three_level")) {
      Section s = root.child("three_level");
      s.number("delta", c.three_level.delta);
      s.number("delta1", c.three_level.delta1);
      if (s.has("jumps")) {
        const json& list = s.raw("jumps");
        if (!list.is_array()) throw ConfigError("three_level.jumps: expected an array");
        for (std::size_t k = 0; k < list.size(); ++k) {
          Section j(list[k], "three_level.jumps[" + std::to_string(k) + "]");
          lindblad::JumpOperator op;
          op.rate = j.number("rate");
          const Eigen::MatrixXd re = j.matrix("re", j.raw("re"));
          const Eigen::MatrixXd im = j.matrix("im", j.raw("im"));
          if (re.rows() != im.rows() || re.cols() != im.cols()) {
            throw ConfigError("three_level.jumps[" + std::to_string(k) + "]: re/im shapes differ");
          }
          op.op = re.cast<std::complex<double>>() +
                  std::complex<double>(0.0, 1.0) * im.cast<std::complex<double>>();
          j.finish();
          c.jumps.push_back(std::move(op));
        }
      }
      s.finish();
    }
  } else {
    forbid("three_level");
  }

  if (control) {
    forbid("benchmark");
    Section s = root.child("ocp");
    pmp::OcpConfig& p = c.ocp.problem;
    s.number("gamma", p.gamma);
    s.number("eta", p.eta);
    s.number("epsilon", p.epsilon);
    s.number("mu_minus", p.mu_minus);
    s.number("mu_plus", p.mu_plus);
    s.number("c_sat", p.c_sat);
    s.number("t0", p.t0);
    p.rho_i = s.vector("rho_i");
    p.rho_f = s.vector("rho_f");
    s.number("tf_guess", c.ocp.tf_guess);
    s.boolean("free_final_time", c.ocp.free_final_time);
    s.number("c_map_min", c.ocp.c_map_min);
    s.number("c_map_max", c.ocp.c_map_max);
    s.boolean("terminal_weight", c.ocp.terminal_weight);
    s.finish();
  } else {
    forbid("ocp");
    if (root.has("benchmark")) {
      Section s = root.child("benchmark");
      s.number("rate", c.benchmark.rate);
      s.number("y0", c.benchmark.y0);
      s.number("t0", c.benchmark.t0);
      s.number("tf", c.benchmark.tf);
      s.finish();
    }
  }

  {
    Section s = root.child("qnn");
    s.integer("circuits", c.qnn.circuits);
    s.integer("depth", c.qnn.depth);
    s.integer("cutoff", c.qnn.cutoff);
    c.qnn.seed = s.unsigned_integer("seed");
    s.number("active_std", c.qnn.active_std);
    s.finish();
  }
  if (root.has("tfc")) {
    Section s = root.child("tfc");
    s.integer("nodes", c.tfc.nodes);
    s.number("tau0", c.tfc.tau0);
    s.number("tauf", c.tfc.tauf);
    s.number("h_tau", c.tfc.h_tau);
    s.finish();
  }
  if (root.has("train")) {
    Section s = root.child("train");
    if (s.has("mode")) {
      const std::string mode = s.string("mode");
      rethrow_as_config("train.mode", [&] { c.train.mode = optimize::train_mode_from_string(mode); });
    }
    s.number("tol", c.train.tol);
    s.integer("max_iter", c.train.max_iter);
    s.integer("max_epochs", c.train.max_epochs);
    s.number("damping", c.train.damping);
    s.number("lr", c.train.lr);
    s.integer("gn_steps_per_round", c.train.gn_steps_per_round);
    s.integer("adam_epochs_per_round", c.train.adam_epochs_per_round);
    s.finish();
  }
  if (root.has("output")) {
    Section s = root.child("output");
    s.string("dir", c.output.dir);
    s.integer("samples", c.output.samples);
    s.integer("rk4_substeps", c.output.rk4_substeps);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    const std::size_t pos = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const std::string_view head = std::string_view(text).substr(0, pos);
    const auto line = 1 + static_cast<std::size_t>(std::count(head.begin(), head.end(), '\n'));
    const std::size_t nl = head.rfind('\n');
    const std::size_t col = nl == std::string_view::npos ? pos + 1 : pos - nl;
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON syntax error: " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["system"] = to_string(c.system);
  if (!c.name.empty()) j["name"] = c.name;
  if (c.system == SystemKind::TwoLevel) {
    j["two_level"] = {{"gamma_eg", c.two_level.gamma_eg},
                      {"gamma_ge", c.two_level.gamma_ge},
                      {"omega_x", c.two_level.omega_x},
                      {"omega_z", c.two_level.omega_z}};
  }
  if (c.system == SystemKind::ThreeLevel) {
    json s = {{"delta", c.three_level.delta}, {"delta1", c.three_level.delta1}};
    if (!c.jumps.empty()) {
      json list = json::array();
      for (const auto& op : c.jumps) {
        list.push_back({{"rate", op.rate},
                        {"re", matrix_json(op.op.real())},
                        {"im", matrix_json(op.op.imag())}});
      }
      s["jumps"] = list;
    }
    j["three_level"] = s;
  }
  if (c.system == SystemKind::LinearOde) {
    j["benchmark"] = {{"rate", c.benchmark.rate},
                      {"y0", c.benchmark.y0},
                      {"t0", c.benchmark.t0},
                      {"tf", c.benchmark.tf}};
  } else {
    const pmp::OcpConfig& p = c.ocp.problem;
    j["ocp"] = {{"gamma", p.gamma},
                {"eta", p.eta},
                {"epsilon", p.epsilon},
                {"mu_minus", p.mu_minus},
                {"mu_plus", p.mu_plus},
                {"c_sat", p.c_sat},
                {"t0", p.t0},
                {"rho_i", vector_json(p.rho_i)},
                {"rho_f", vector_json(p.rho_f)},
                {"tf_guess", c.ocp.tf_guess},
                {"free_final_time", c.ocp.free_final_time},
                {"c_map_min", c.ocp.c_map_min},
                {"c_map_max", c.ocp.c_map_max},
                {"terminal_weight", c.ocp.terminal_weight}};
  }
  j["qnn"] = {{"circuits", c.qnn.circuits},
              {"depth", c.qnn.depth},
              {"cutoff", c.qnn.cutoff},
              {"seed", c.qnn.seed},
              {"active_std", c.qnn.active_std}};
  j["tfc"] = {{"nodes", c.tfc.nodes},
              {"tau0", c.tfc.tau0},
              {"tauf", c.tfc.tauf},
              {"h_tau", c.tfc.h_tau}};
  j["train"] = {{"mode", optimize::to_string(c.train.mode)},
                {"tol", c.train.tol},
                {"max_iter", c.train.max_iter},
                {"max_epochs", c.train.max_epochs},
                {"damping", c.train.damping},
                {"lr", c.train.lr},
                {"gn_steps_per_round", c.train.gn_steps_per_round},
                {"adam_epochs_per_round", c.train.adam_epochs_per_round}};
  j["output"] = {{"dir", c.output.dir},
                 {"samples", c.output.samples},
                 {"rk4_substeps", c.output.rk4_substeps}};
  return j;
}

std::vector<std::string> preset_names() {
  return {"linear_ode_benchmark", "two_level_ground_to_excited", "two_level_to_superposition",
          "three_level_pop_inversion"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.output.dir = "out/" + name;
  if (name == "linear_ode_benchmark") {
    c.system = SystemKind::LinearOde;
    c.qnn.seed = 18;
    c.train.mode = optimize::TrainMode::XiOnly;
    c.train.tol = 1e-6;
    c.train.max_iter = 50;
  } else if (name == "two_level_ground_to_excited" || name == "two_level_to_superposition") {
    c.system = SystemKind::TwoLevel;
    c.qnn.seed = 11;
    c.ocp.problem.rho_i = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
    c.ocp.problem.rho_f = name == "two_level_ground_to_excited"
                              ? Eigen::Vector4d(0.05, 0.95, 0.0, 0.0)
                              : Eigen::Vector4d(0.5, 0.5, 0.4, 0.0);
    c.ocp.tf_guess = 3.0;
    c.train.mode = optimize::TrainMode::Joint;
    c.train.tol = 1e-2;
    c.train.max_iter = 60;
    c.train.max_epochs = 100;
  } else if (name == "three_level_pop_inversion") {
    c.system = SystemKind::ThreeLevel;
    c.qnn.seed = 5;
    Eigen::VectorXd rho_i = Eigen::VectorXd::Zero(9);
    Eigen::VectorXd rho_f = Eigen::VectorXd::Zero(9);
    rho_i.head(3) << 0.8, 0.15, 0.05;
    rho_f.head(3) << 0.15, 0.8, 0.05;
    c.ocp.problem.rho_i = rho_i;
    c.ocp.problem.rho_f = rho_f;
    c.ocp.tf_guess = 3.0;
    c.train.mode = optimize::TrainMode::Joint;
    c.train.tol = 1e-2;
    c.train.max_iter = 30;
    c.train.max_epochs = 50;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

json bank_to_json(const cvqnn::QnnBank& bank) {
  json circuits = json::array();
  for (const auto& circuit : bank.circuits()) {
    std::vector<double> params;
    circuit.write_parameters(params);
    circuits.push_back({{"depth", circuit.depth()}, {"parameters", params}});
  }
  return {{"cutoff", bank.cutoff()}, {"circuits", circuits}};
}

cvqnn::QnnBank bank_from_json(const json& doc) {
  Section root(doc, "bank");
  int cutoff = 0;
  root.integer("cutoff", cutoff);
  const json& list = root.raw("circuits");
  if (!list.is_array() || list.empty()) {
    throw ConfigError("bank.circuits: expected a non-empty array");
  }
  std::vector<cvqnn::QnnCircuit> circuits;
  for (std::size_t l = 0; l < list.size(); ++l) {
    Section s(list[l], "bank.circuits[" + std::to_string(l) + "]");
    int depth = 0;
    s.integer("depth", depth);
    if (depth < 1) throw ConfigError(s.key_path("depth") + ": must be at least 1");
    const Eigen::VectorXd params = s.vector("parameters");
    s.finish();
    std::vector<cvqnn::QnnUnitParams> units(static_cast<std::size_t>(depth),
                                            cvqnn::QnnUnitParams::zeros(1));
    rethrow_as_config("bank.circuits[" + std::to_string(l) + "]", [&] {
      cvqnn::QnnCircuit circuit(units, 1, cutoff);
      if (static_cast<std::size_t>(params.size()) != circuit.parameter_count()) {
        throw ConfigError("bank.circuits[" + std::to_string(l) + "].parameters: expected " +
                          std::to_string(circuit.parameter_count()) + " values");
      }
      Eigen::Index offset = 0;
      circuit.read_parameters(params, offset);
      circuits.push_back(std::move(circuit));
    });
  }
  root.finish();
  return cvqnn::QnnBank(std::move(circuits));
}

cvqnn::QnnBank make_bank(const ExperimentConfig& c) {
  return cvqnn::QnnBank::random(c.qnn.circuits, c.qnn.depth, c.qnn.cutoff, c.qnn.seed,
                                c.qnn.active_std);
}

std::unique_ptr<QnnCollocationSystem> make_system(const ExperimentConfig& c) {
  c.validate();
  const std::vector<double> nodes = tfc::cgl_nodes(c.tfc.nodes, c.tfc.tau0, c.tfc.tauf);
  if (c.system == SystemKind::LinearOde) {
    return std::make_unique<LinearOdeSystem>(
        c.benchmark.rate, c.benchmark.y0,
        tfc::TimeMorph(c.benchmark.t0, c.benchmark.tf, c.tfc.tau0, c.tfc.tauf), make_bank(c), nodes,
        c.tfc.h_tau);
  }
  pmp::PmpResidualSystem::Settings settings;
  settings.free_final_time = c.ocp.free_final_time;
  settings.c_map_bounds = {c.ocp.c_map_min, c.ocp.c_map_max};
  if (c.ocp.terminal_weight) {
    settings.weights = pmp::ResidualWeights::terminal_scaled(nodes.size());
  }
  settings.h_tau = c.tfc.h_tau;
  settings.tau0 = c.tfc.tau0;
  settings.tauf = c.tfc.tauf;
  return std::make_unique<pmp::PmpResidualSystem>(make_model(c), problem_with_costate(c),
                                                  make_bank(c), c.ocp.tf_guess, nodes, settings);
}

ExperimentResult run_experiment(const ExperimentConfig& c, bool write_files) {
  ExperimentResult result;
  result.system = make_system(c);
  QnnCollocationSystem& sys = *result.system;

  if (c.train.mode == optimize::TrainMode::ThetaOnly) {
    // With all weights at zero the circuit parameters have no gradient.
    std::mt19937_64 rng(c.qnn.seed + 1);
    std::normal_distribution<double> normal(0.0, 0.1);
    Eigen::VectorXd xi = sys.xi();
    const Eigen::Index n_weights = xi.size() - (sys.free_final_time() ? 1 : 0);
    for (Eigen::Index k = 0; k < n_weights; ++k) xi(k) = normal(rng);
    sys.set_xi(xi);
  }

  std::string jsonl;
  result.report = optimize::train(sys, c.train, [&](int epoch, QnnCollocationSystem& s) {
    jsonl += breakdown_json(epoch, s.breakdown()).dump() + "\n";
  });

  json report = report_core(c, result.report);
  const LossBreakdown final_breakdown = sys.breakdown();
  report["breakdown"] = breakdown_json(result.report.iterations, final_breakdown);
  report["tf"] = sys.morph().tf();
  report["c_map"] = sys.morph().c_map();

  const tfc::TimeMorph morph = sys.morph();
  const std::vector<double> taus = sample_taus(morph, c.output.samples);

  if (c.system == SystemKind::LinearOde) {
    auto& ode = dynamic_cast<LinearOdeSystem&>(sys);
    result.trajectory.header = {"t", "x1", "exact"};
    result.verification.header = {"t", "x1"};
    double max_err = 0.0;
    for (double tau : taus) {
      const double t = morph.to_t(tau);
      const double y = ode.eval_unknown(0, tau).value(0);
      const double exact = ode.exact(t);
      max_err = std::max(max_err, std::abs(y - exact));
      result.trajectory.rows.push_back({t, y, exact});
      result.verification.rows.push_back({t, exact});
    }
    report["max_abs_error"] = max_err;
    report["boundary_error"] = std::abs(ode.eval_unknown(0, morph.tau0()).value(0) - ode.y0());
  } else {
    auto& ocp = dynamic_cast<pmp::PmpResidualSystem&>(sys);
    const pmp::OcpConfig& p = ocp.config();
    const Eigen::Index dim = c.state_dim();
    const std::size_t m = ocp.n_controls();
    result.trajectory.header = state_header(dim, m);
    result.verification.header = result.trajectory.header;

    double u_min = std::numeric_limits<double>::infinity();
    double u_max = -u_min;
    double constraint_max = 0.0;
    for (double tau : taus) {
      const pmp::NodeValues v = ocp.values_at(tau);
      std::vector<double> row{morph.to_t(tau)};
      row.insert(row.end(), v.rho.data(), v.rho.data() + dim);
      for (std::size_t k = 0; k < m; ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        row.push_back(v.u(ki));
        u_min = std::min(u_min, v.u(ki));
        u_max = std::max(u_max, v.u(ki));
        constraint_max = std::max(constraint_max, std::abs(v.u(ki) - pmp::saturation(v.nu(ki), p)));
      }
      row.push_back(lindblad::trace(v.rho));
      result.trajectory.rows.push_back(std::move(row));
    }

    const pmp::NodeValues start = ocp.values_at(morph.tau0());
    const pmp::NodeValues end = ocp.values_at(morph.tauf());
    const double boundary_error = std::max({(start.rho - p.rho_i).norm(),
                                            (end.rho - p.rho_f).norm(), end.lambda.norm()});

    const lindblad::ControlSignal control = [&](double t) {
      return ocp.eval_unknown(pmp::PmpResidualSystem::kU, clamp_tau(morph.to_tau(t), morph)).value;
    };
    const int steps = (c.output.samples - 1) * c.output.rk4_substeps;
    const lindblad::Trajectory rk4 =
        lindblad::propagate_rk4(ocp.model(), p.rho_i, control, morph.t0(), morph.tf(), steps);
    double trace_drift = 0.0;
    for (const auto& x : rk4.x) {
      trace_drift = std::max(trace_drift, std::abs(lindblad::trace(x) - 1.0));
    }
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const std::size_t idx = k * static_cast<std::size_t>(c.output.rk4_substeps);
      const Eigen::VectorXd& x = rk4.x[idx];
      std::vector<double> row{rk4.t[idx]};
      row.insert(row.end(), x.data(), x.data() + dim);
      const auto u = control_row(control(rk4.t[idx]));
      row.insert(row.end(), u.begin(), u.end());
      row.push_back(lindblad::trace(x));
      result.verification.rows.push_back(std::move(row));
    }

    report["terminal"] = {{"approximant_error", (end.rho - p.rho_f).norm()},
                          {"rk4_error", (rk4.x.back() - p.rho_f).norm()},
                          {"boundary_error", boundary_error}};
    report["boundary_error"] = boundary_error;
    report["trace_drift_rk4"] = trace_drift;
    report["u_min"] = u_min;
    report["u_max"] = u_max;
    report["constraint_max"] = constraint_max;
    report["hamiltonian_residual"] = ocp.hamiltonian_at(morph.tauf()) + p.gamma;
  }
  result.report_json = report;

  if (write_files) {
    namespace fs = std::filesystem;
    const fs::path dir(c.output.dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    csv::write((dir / "trajectory.csv").string(), result.trajectory);
    csv::write((dir / "verify.csv").string(), result.verification);
    write_text(dir / "train.jsonl", jsonl);
    write_text(dir / "report.json", report.dump(2) + "\n");
    json params = {{"bank", bank_to_json(sys.bank())},
                   {"xi", vector_json(sys.xi())},
                   {"c_map", sys.morph().c_map()},
                   {"tf", sys.morph().tf()}};
    write_text(dir / "params.json", params.dump(2) + "\n");
    write_text(dir / "config.json", to_json(c).dump(2) + "\n");
  }
  return result;
}

VerifySummary verify(const csv::Table& trajectory, const csv::Table& reference, double tol) {
  if (!(tol > 0.0)) {
    throw ConfigError("verify: tolerance must be positive");
  }
  if (trajectory.rows.size() != reference.rows.size() || trajectory.rows.empty()) {
    throw ConfigError("verify: grid mismatch (row counts differ or empty)");
  }
  const std::size_t ct = trajectory.column("t");
  const std::size_t cr = reference.column("t");
  for (std::size_t k = 0; k < trajectory.rows.size(); ++k) {
    const double a = trajectory.rows[k][ct];
    const double b = reference.rows[k][cr];
    if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(a))) {
      throw ConfigError("verify: grid mismatch at row " + std::to_string(k + 1));
    }
  }
  VerifySummary s;
  s.tol = tol;
  double terminal_sq = 0.0;
  for (const auto& name : trajectory.header) {
    if (name.empty() || name[0] != 'x' || !reference.has_column(name)) continue;
    const std::size_t a = trajectory.column(name);
    const std::size_t b = reference.column(name);
    double dev = 0.0;
    for (std::size_t k = 0; k < trajectory.rows.size(); ++k) {
      dev = std::max(dev, std::abs(trajectory.rows[k][a] - reference.rows[k][b]));
    }
    const double last = trajectory.rows.back()[a] - reference.rows.back()[b];
    terminal_sq += last * last;
    s.components.push_back(name);
    s.max_deviation.push_back(dev);
  }
  if (s.components.empty()) {
    throw ConfigError("verify: no shared x* columns to compare");
  }
  for (const csv::Table* t : {&trajectory, &reference}) {
    if (!t->has_column("trace")) continue;
    for (double v : t->column_values("trace")) {
      s.trace_drift = std::max(s.trace_drift, std::abs(v - 1.0));
    }
  }
  s.terminal_error = std::sqrt(terminal_sq);
  s.pass = s.trace_drift < tol && s.terminal_error < tol &&
           std::all_of(s.max_deviation.begin(), s.max_deviation.end(),
                       [tol](double d) { return d < tol; });
  return s;
}

}  // namespace cvqoc::experiment
