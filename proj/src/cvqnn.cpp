#include "cvqoc/cvqnn.hpp"

#include "cvqoc/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace cvqoc::cvqnn {

namespace {

std::size_t pair_count(int n_modes) {
  return static_cast<std::size_t>(n_modes) * (n_modes - 1) / 2;
}

void check_values(const std::vector<double>& values, std::size_t expected, const char* name) {
  if (values.size() != expected) {
    throw InvalidParameter(std::string("QnnUnitParams: ") + name + " has length " +
                           std::to_string(values.size()) + ", expected " +
                           std::to_string(expected));
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InvalidParameter(std::string("QnnUnitParams: non-finite entry in ") + name);
    }
  }
}

// Matrix of a full unit on the n-mode space.
fock::FockOperator unit_matrix(const QnnUnitParams& p, int n_modes, int cutoff) {
  fock::FockOperator total = fock::FockOperator::identity(cutoff, n_modes);
  auto push = [&](const fock::FockOperator& single, int mode) {
    total = fock::tensor_embed(single, mode, n_modes, cutoff) * total;
  };
  auto interferometer = [&](const Interferometer& ifm) {
    // Rectangular mesh: layer l touches pairs (k, k+1) with k = l mod 2.
    std::size_t next = 0;
    for (int layer = 0; layer < n_modes; ++layer) {
      for (int k = layer % 2; k + 1 < n_modes; k += 2) {
        push(fock::gate_matrix(fock::BeamSplitter{ifm.bs_angles[next++], k}, cutoff), k);
      }
    }
    for (int m = 0; m < n_modes; ++m) {
      push(fock::gate_matrix(fock::Rotation{ifm.rotations[m]}, cutoff), m);
    }
  };

  interferometer(p.first);
  for (int m = 0; m < n_modes; ++m) {
    push(fock::gate_matrix(fock::Squeeze{p.squeezes[m]}, cutoff), m);
  }
  interferometer(p.second);
  for (int m = 0; m < n_modes; ++m) {
    push(fock::gate_matrix(fock::Displacement{p.displacements[m]}, cutoff), m);
  }
  for (int m = 0; m < n_modes; ++m) {
    push(fock::gate_matrix(fock::Kerr{p.kerr[m]}, cutoff), m);
  }
  return total;
}

}  // namespace

QnnUnitParams QnnUnitParams::zeros(int n_modes) {
  if (n_modes < 1) {
    throw InvalidParameter("QnnUnitParams: n_modes must be >= 1");
  }
  const auto n = static_cast<std::size_t>(n_modes);
  QnnUnitParams p;
  p.first = {std::vector<double>(pair_count(n_modes), 0.0), std::vector<double>(n, 0.0)};
  p.squeezes.assign(n, 0.0);
  p.second = p.first;
  p.displacements.assign(n, Complex(0.0, 0.0));
  p.kerr.assign(n, 0.0);
  return p;
}

void QnnUnitParams::validate(int n_modes) const {
  if (n_modes < 1) {
    throw InvalidParameter("QnnUnitParams: n_modes must be >= 1");
  }
  const auto n = static_cast<std::size_t>(n_modes);
  check_values(first.bs_angles, pair_count(n_modes), "first.bs_angles");
  check_values(first.rotations, n, "first.rotations");
  check_values(squeezes, n, "squeezes");
  check_values(second.bs_angles, pair_count(n_modes), "second.bs_angles");
  check_values(second.rotations, n, "second.rotations");
  check_values(kerr, n, "kerr");
  if (displacements.size() != n) {
    throw InvalidParameter("QnnUnitParams: displacements has wrong length");
  }
  for (const Complex& a : displacements) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      throw InvalidParameter("QnnUnitParams: non-finite displacement");
    }
  }
}

std::size_t QnnUnitParams::parameter_count(int n_modes) {
  const auto n = static_cast<std::size_t>(n_modes);
  // two interferometers, squeezes, complex displacements, kerr
  return 2 * (pair_count(n_modes) + n) + n + 2 * n + n;
}

fock::FockVector unit_apply(const fock::FockVector& state, const QnnUnitParams& params) {
  params.validate(state.modes());
  return fock::apply(unit_matrix(params, state.modes(), state.cutoff()), state);
}

fock::FockVector encode_input(double tau, int cutoff) {
  if (!std::isfinite(tau)) {
    throw InvalidParameter("encode_input: tau is not finite");
  }
  return fock::apply(fock::gate_matrix(fock::Displacement{Complex(tau, 0.0)}, cutoff),
                     fock::FockVector::vacuum(cutoff));
}

QnnCircuit::QnnCircuit(std::vector<QnnUnitParams> units, int n_modes, int cutoff)
    : units_(std::move(units)), n_modes_(n_modes), cutoff_(cutoff) {
  if (cutoff < 2) {
    throw InvalidCutoff("QnnCircuit: cutoff must be >= 2");
  }
  for (const auto& u : units_) {
    u.validate(n_modes);
  }
}

fock::FockVector QnnCircuit::apply(const fock::FockVector& state) const {
  fock::FockVector out = state;
  for (const auto& u : units_) {
    out = unit_apply(out, u);
  }
  return out;
}

fock::FockOperator QnnCircuit::unitary() const {
  fock::FockOperator total = fock::FockOperator::identity(cutoff_, n_modes_);
  for (const auto& u : units_) {
    total = unit_matrix(u, n_modes_, cutoff_) * total;
  }
  return total;
}

std::size_t QnnCircuit::parameter_count() const {
  return units_.size() * QnnUnitParams::parameter_count(n_modes_);
}

void QnnCircuit::write_parameters(std::vector<double>& out) const {
  for (const auto& u : units_) {
    auto put = [&](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); };
    put(u.first.bs_angles);
    put(u.first.rotations);
    put(u.squeezes);
    put(u.second.bs_angles);
    put(u.second.rotations);
    for (const Complex& a : u.displacements) {
      out.push_back(a.real());
      out.push_back(a.imag());
    }
    put(u.kerr);
  }
}

void QnnCircuit::read_parameters(const Eigen::VectorXd& values, Eigen::Index& offset) {
  if (offset + static_cast<Eigen::Index>(parameter_count()) > values.size()) {
    throw DimensionMismatch("QnnCircuit::read_parameters: not enough values");
  }
  for (auto& u : units_) {
    auto get = [&](std::vector<double>& v) {
      for (double& x : v) {
        x = values(offset++);
      }
    };
    get(u.first.bs_angles);
    get(u.first.rotations);
    get(u.squeezes);
    get(u.second.bs_angles);
    get(u.second.rotations);
    for (Complex& a : u.displacements) {
      const double re = values(offset++);
      const double im = values(offset++);
      a = Complex(re, im);
    }
    get(u.kerr);
    u.validate(n_modes_);
  }
}

QnnBank::QnnBank(std::vector<QnnCircuit> circuits) : circuits_(std::move(circuits)) {
  if (circuits_.empty()) {
    throw InvalidParameter("QnnBank: needs at least one circuit");
  }
  cutoff_ = circuits_.front().cutoff();
  for (const auto& c : circuits_) {
    if (c.cutoff() != cutoff_) {
      throw InvalidParameter("QnnBank: circuits must share the cutoff");
    }
    if (c.n_modes() != 1) {
      throw InvalidParameter("QnnBank: circuits must be single-mode");
    }
  }
  rebuild_observables();
}

QnnBank QnnBank::random(int n_circuits, int depth, int cutoff, std::uint64_t seed,
                        double active_std) {
  if (n_circuits < 1 || depth < 0) {
    throw InvalidParameter("QnnBank::random: need n_circuits >= 1 and depth >= 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> passive(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> active(0.0, active_std);

  std::vector<QnnCircuit> circuits;
  circuits.reserve(static_cast<std::size_t>(n_circuits));
  for (int l = 0; l < n_circuits; ++l) {
    std::vector<QnnUnitParams> units;
    for (int d = 0; d < depth; ++d) {
      QnnUnitParams p = QnnUnitParams::zeros(1);
      p.first.rotations[0] = passive(rng);
      p.squeezes[0] = active(rng);
      p.second.rotations[0] = passive(rng);
      const double re = active(rng);
      const double im = active(rng);
      p.displacements[0] = Complex(re, im);
      p.kerr[0] = active(rng);
      units.push_back(std::move(p));
    }
    circuits.emplace_back(std::move(units), 1, cutoff);
  }
  return QnnBank(std::move(circuits));
}

Eigen::VectorXd QnnBank::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& c : circuits_) {
    c.write_parameters(flat);
  }
  return Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

std::size_t QnnBank::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : circuits_) {
    n += c.parameter_count();
  }
  return n;
}

void QnnBank::set_parameters(const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw DimensionMismatch("QnnBank::set_parameters: wrong length");
  }
  Eigen::Index offset = 0;
  for (auto& c : circuits_) {
    c.read_parameters(values, offset);
  }
  rebuild_observables();
  ++version_;
}

void QnnBank::rebuild_observables() {
  const Eigen::MatrixXcd x = fock::quadrature_x(cutoff_).entries();
  observables_.clear();
  observables_.reserve(circuits_.size());
  for (const auto& c : circuits_) {
    const Eigen::MatrixXcd u = c.unitary().entries();
    observables_.push_back(u.adjoint() * x * u);
  }
}

Eigen::VectorXd QnnBank::features(const fock::FockVector& encoded) const {
  if (encoded.cutoff() != cutoff_ || encoded.modes() != 1) {
    throw DimensionMismatch("QnnBank::features: encoded state has the wrong space");
  }
  const Eigen::VectorXcd& psi = encoded.amplitudes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(circuits_.size()));
  for (std::size_t l = 0; l < observables_.size(); ++l) {
    out(static_cast<Eigen::Index>(l)) = psi.dot(observables_[l] * psi).real();
  }
  return out;
}

Eigen::VectorXd forward(const QnnBank& bank, double tau) {
  return bank.features(encode_input(tau, bank.cutoff()));
}

Eigen::VectorXd forward_dtau(const QnnBank& bank, double tau, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidParameter("forward_dtau: step must be positive");
  }
  return (forward(bank, tau + h) - forward(bank, tau - h)) / (2.0 * h);
}

}  // namespace cvqoc::cvqnn
