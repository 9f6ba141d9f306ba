#pragma once

// Continuous-variable quantum neural networks simulated in a truncated Fock
// basis. A unit applies, in order: interferometer, local squeezers, a second
// interferometer, local displacements and local Kerr gates. Interferometers
// are rectangular meshes of adjacent beam splitters followed by one rotation
// per mode; on a single mode they reduce to a rotation.

#include "cvqoc/fock.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace cvqoc::cvqnn {

using fock::Complex;

struct Interferometer {
  std::vector<double> bs_angles;  // n(n-1)/2
  std::vector<double> rotations;  // n
};

struct QnnUnitParams {
  Interferometer first;
  std::vector<double> squeezes;
  Interferometer second;
  std::vector<Complex> displacements;
  std::vector<double> kerr;

  static QnnUnitParams zeros(int n_modes);
  /// Throws InvalidParameter if shapes do not fit n_modes or an entry is not finite.
  void validate(int n_modes) const;
  /// Number of real parameters of a unit on n_modes qumodes.
  static std::size_t parameter_count(int n_modes);
};

/// Applies one unit; the cutoff and mode count come from the state.
fock::FockVector unit_apply(const fock::FockVector& state, const QnnUnitParams& params);

/// D(tau)|0> on a single mode.
fock::FockVector encode_input(double tau, int cutoff);

class QnnCircuit {
 public:
  QnnCircuit(std::vector<QnnUnitParams> units, int n_modes, int cutoff);

  const std::vector<QnnUnitParams>& units() const { return units_; }
  int n_modes() const { return n_modes_; }
  int cutoff() const { return cutoff_; }
  std::size_t depth() const { return units_.size(); }

  fock::FockVector apply(const fock::FockVector& state) const;
  /// Product of all unit matrices, the first unit acting first.
  fock::FockOperator unitary() const;

  std::size_t parameter_count() const;
  void write_parameters(std::vector<double>& out) const;
  /// Reads parameter_count() values starting at `offset`, advancing it.
  void read_parameters(const Eigen::VectorXd& values, Eigen::Index& offset);

 private:
  std::vector<QnnUnitParams> units_;
  int n_modes_;
  int cutoff_;
};

/// L independent single-mode circuits, one feature each.
///
/// The bank keeps, per circuit, the Heisenberg-picture observable U^dag x U,
/// so a feature is a single quadratic form in the encoded input state. The
/// version counter increases on every parameter write.
class QnnBank {
 public:
  explicit QnnBank(std::vector<QnnCircuit> circuits);

  /// Passive angles uniform in [0, 2pi), active parameters (r, alpha, kappa)
  /// normal with standard deviation `active_std`, drawn from std::mt19937_64.
  static QnnBank random(int n_circuits, int depth, int cutoff, std::uint64_t seed,
                        double active_std = 0.05);

  std::size_t size() const { return circuits_.size(); }
  int cutoff() const { return cutoff_; }
  const std::vector<QnnCircuit>& circuits() const { return circuits_; }
  std::uint64_t version() const { return version_; }

  Eigen::VectorXd parameters() const;
  std::size_t parameter_count() const;
  void set_parameters(const Eigen::VectorXd& values);

  /// Features for an already encoded input state.
  Eigen::VectorXd features(const fock::FockVector& encoded) const;

 private:
  void rebuild_observables();

  std::vector<QnnCircuit> circuits_;
  int cutoff_;
  std::vector<Eigen::MatrixXcd> observables_;
  std::uint64_t version_ = 0;
};

/// sigma_l(tau) = <x> at the output of circuit l fed with encode_input(tau).
Eigen::VectorXd forward(const QnnBank& bank, double tau);

/// Central difference (sigma(tau + h) - sigma(tau - h)) / (2h).
Eigen::VectorXd forward_dtau(const QnnBank& bank, double tau, double h);

}  // namespace cvqoc::cvqnn
