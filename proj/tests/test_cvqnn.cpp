#include "cvqoc/cvqnn.hpp"
#include "cvqoc/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cvqoc;
using namespace cvqoc::cvqnn;
using fock::FockVector;

namespace {

const double kSqrt2 = std::sqrt(2.0);

QnnUnitParams random_unit(int n_modes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 6.28);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  QnnUnitParams p = QnnUnitParams::zeros(n_modes);
  for (auto& v : p.first.bs_angles) v = angle(rng);
  for (auto& v : p.first.rotations) v = angle(rng);
  for (auto& v : p.second.bs_angles) v = angle(rng);
  for (auto& v : p.second.rotations) v = angle(rng);
  for (auto& v : p.squeezes) v = small(rng);
  for (auto& v : p.displacements) v = Complex(small(rng), small(rng));
  for (auto& v : p.kerr) v = small(rng);
  return p;
}

QnnBank depth_zero_bank(int n, int cutoff) {
  std::vector<QnnCircuit> circuits;
  for (int l = 0; l < n; ++l) circuits.emplace_back(std::vector<QnnUnitParams>{}, 1, cutoff);
  return QnnBank(std::move(circuits));
}

}  // namespace

TEST(EncodeInput, ZeroIsVacuum) {
  EXPECT_EQ(encode_input(0.0, 10).amplitudes(), FockVector::vacuum(10).amplitudes());
}

TEST(EncodeInput, CoherentAmplitudeAndMean) {
  const FockVector psi = encode_input(0.4, 30);
  EXPECT_NEAR(psi.amplitudes()(0).real(), std::exp(-0.08), 1e-12);
  EXPECT_NEAR(fock::expectation(fock::quadrature_x(30), psi), kSqrt2 * 0.4, 1e-6);
}

TEST(EncodeInput, RejectsNonFinite) {
  EXPECT_THROW(encode_input(NAN, 10), InvalidParameter);
}

TEST(UnitApply, ZeroParametersAreIdentity) {
  std::mt19937_64 rng(1);
  const FockVector psi = encode_input(0.3, 8);
  EXPECT_LT((unit_apply(psi, QnnUnitParams::zeros(1)).amplitudes() - psi.amplitudes()).norm(), 1e-15);
  Eigen::VectorXcd two = Eigen::VectorXcd::Zero(64);
  two(9) = 1.0;
  const FockVector psi2(two, 8, 2);
  EXPECT_LT((unit_apply(psi2, QnnUnitParams::zeros(2)).amplitudes() - two).norm(), 1e-15);
}

TEST(UnitApply, SingleModeRotationOnly) {
  QnnUnitParams p = QnnUnitParams::zeros(1);
  p.first.rotations[0] = 0.7;
  const FockVector psi = encode_input(0.5, 12);
  const FockVector expected = fock::apply(fock::gate_matrix(fock::Rotation{0.7}, 12), psi);
  EXPECT_LT((unit_apply(psi, p).amplitudes() - expected.amplitudes()).norm(), 1e-14);
}

TEST(UnitApply, NormPreservedAtHighCutoff) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const FockVector psi = unit_apply(encode_input(0.3, 30), random_unit(1, rng));
    EXPECT_NEAR(psi.norm_squared(), 1.0, 1e-6);
  }
  const FockVector vac2 = FockVector::vacuum(12, 2);
  EXPECT_NEAR(unit_apply(vac2, random_unit(2, rng)).norm_squared(), 1.0, 1e-6);
}

TEST(UnitApply, GateOrder) {
  // Independent composition in the documented order.
  std::mt19937_64 rng(3);
  const QnnUnitParams p = random_unit(1, rng);
  const int d = 15;
  using namespace fock;
  const FockOperator u = gate_matrix(Kerr{p.kerr[0]}, d) * gate_matrix(Displacement{p.displacements[0]}, d) *
                         gate_matrix(Rotation{p.second.rotations[0]}, d) *
                         gate_matrix(Squeeze{p.squeezes[0]}, d) *
                         gate_matrix(Rotation{p.first.rotations[0]}, d);
  const FockVector psi = encode_input(0.2, d);
  EXPECT_LT((unit_apply(psi, p).amplitudes() - apply(u, psi).amplitudes()).norm(), 1e-12);
}

TEST(UnitApply, ShapeValidation) {
  QnnUnitParams p = QnnUnitParams::zeros(2);
  p.squeezes.pop_back();
  EXPECT_THROW(p.validate(2), InvalidParameter);
  EXPECT_THROW(unit_apply(FockVector::vacuum(5), QnnUnitParams::zeros(2)), Error);
  EXPECT_EQ(QnnUnitParams::parameter_count(1), 6u);
}

TEST(QnnCircuit, TrailingZeroUnitIsExact) {
  std::mt19937_64 rng(4);
  const QnnUnitParams p = random_unit(1, rng);
  const QnnCircuit one({p}, 1, 10);
  const QnnCircuit two({p, QnnUnitParams::zeros(1)}, 1, 10);
  const FockVector psi = encode_input(0.45, 10);
  EXPECT_EQ(one.apply(psi).amplitudes(), two.apply(psi).amplitudes());
}

TEST(QnnCircuit, ParameterRoundTrip) {
  std::mt19937_64 rng(5);
  QnnCircuit c({random_unit(2, rng), random_unit(2, rng)}, 2, 5);
  std::vector<double> flat;
  c.write_parameters(flat);
  EXPECT_EQ(flat.size(), c.parameter_count());
  QnnCircuit d({QnnUnitParams::zeros(2), QnnUnitParams::zeros(2)}, 2, 5);
  Eigen::Index offset = 0;
  d.read_parameters(Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())),
                    offset);
  std::vector<double> back;
  d.write_parameters(back);
  EXPECT_EQ(flat, back);
}

TEST(QnnBank, DepthZeroFeaturesAreCoherentMeans) {
  const QnnBank bank = depth_zero_bank(3, 30);
  for (double tau : {-0.8, -0.1, 0.0, 0.5, 0.8}) {
    const Eigen::VectorXd s = forward(bank, tau);
    for (Eigen::Index l = 0; l < s.size(); ++l) EXPECT_NEAR(s(l), kSqrt2 * tau, 1e-8);
  }
}

TEST(QnnBank, ZeroParametersAtZeroInput) {
  QnnBank bank = QnnBank::random(4, 2, 10, 1);
  bank.set_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bank.parameter_count())));
  EXPECT_LT(forward(bank, 0.0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(QnnBank, DisplacementOnlyUnit) {
  QnnUnitParams p = QnnUnitParams::zeros(1);
  p.displacements[0] = 0.3;
  const QnnBank bank({QnnCircuit({p}, 1, 30)});
  EXPECT_NEAR(forward(bank, 0.0)(0), kSqrt2 * 0.3, 1e-6);
}

TEST(QnnBank, DerivativeOfDepthZeroBank) {
  const QnnBank bank = depth_zero_bank(2, 30);
  for (double tau : {-0.6, 0.0, 0.3, 0.7}) {
    const Eigen::VectorXd d = forward_dtau(bank, tau, 1.6e-4);
    for (Eigen::Index l = 0; l < d.size(); ++l) EXPECT_NEAR(d(l), kSqrt2, 1e-8);
  }
}

TEST(QnnBank, KerrOnlyDerivativeRichardson) {
  QnnUnitParams p = QnnUnitParams::zeros(1);
  p.kerr[0] = 0.4;
  const QnnBank bank({QnnCircuit({p}, 1, 20)});
  const double h = 1e-2;
  const double coarse = forward_dtau(bank, 0.0, h)(0);
  const double fine = forward_dtau(bank, 0.0, h / 2)(0);
  const double extrapolated = (4.0 * fine - coarse) / 3.0;
  // Second-order scheme: halving h cuts the error by about four.
  EXPECT_NEAR(forward_dtau(bank, 0.0, 1e-4)(0), extrapolated, 1e-7);
  EXPECT_LT(std::abs(fine - extrapolated), std::abs(coarse - extrapolated));
}

TEST(QnnBank, FeaturesMatchDirectSimulation) {
  const QnnBank bank = QnnBank::random(3, 2, 10, 42);
  const fock::FockOperator x = fock::quadrature_x(10);
  for (double tau : {-0.7, 0.05, 0.6}) {
    const Eigen::VectorXd s = forward(bank, tau);
    for (std::size_t l = 0; l < bank.size(); ++l) {
      const double direct = fock::expectation(x, bank.circuits()[l].apply(encode_input(tau, 10)));
      EXPECT_NEAR(s(static_cast<Eigen::Index>(l)), direct, 1e-12);
    }
  }
}

TEST(QnnBank, Determinism) {
  const QnnBank a = QnnBank::random(4, 2, 10, 7);
  const QnnBank b = QnnBank::random(4, 2, 10, 7);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(forward(a, 0.31), forward(a, 0.31));
  EXPECT_EQ(forward(a, 0.31), forward(b, 0.31));
  EXPECT_NE(QnnBank::random(4, 2, 10, 8).parameters(), a.parameters());
}

TEST(QnnBank, InitializationDistribution) {
  const QnnBank bank = QnnBank::random(200, 2, 4, 3, 0.05);
  const Eigen::VectorXd theta = bank.parameters();
  double passive_max = 0.0, active_sq = 0.0;
  int active_n = 0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    // Per unit: rot1, sq, rot2, Re a, Im a, kerr.
    const Eigen::Index slot = k % 6;
    if (slot == 0 || slot == 2) {
      EXPECT_GE(theta(k), 0.0);
      EXPECT_LT(theta(k), 2.0 * M_PI);
      passive_max = std::max(passive_max, theta(k));
    } else {
      active_sq += theta(k) * theta(k);
      ++active_n;
    }
  }
  EXPECT_GT(passive_max, 5.0);
  EXPECT_NEAR(std::sqrt(active_sq / active_n), 0.05, 0.005);
}

TEST(QnnBank, LipschitzInParameters) {
  QnnBank bank = QnnBank::random(4, 2, 10, 9);
  const Eigen::VectorXd base = bank.parameters();
  const Eigen::VectorXd s0 = forward(bank, 0.4);
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    Eigen::VectorXd p = base;
    p(k) += 1e-6;
    bank.set_parameters(p);
    EXPECT_LT((forward(bank, 0.4) - s0).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(QnnBank, VersionBumpsOnWrite) {
  QnnBank bank = QnnBank::random(2, 1, 6, 1);
  const auto v = bank.version();
  bank.set_parameters(bank.parameters());
  EXPECT_GT(bank.version(), v);
  EXPECT_THROW(bank.set_parameters(Eigen::VectorXd::Zero(3)), DimensionMismatch);
}

TEST(QnnBank, Validation) {
  EXPECT_THROW(QnnBank(std::vector<QnnCircuit>{}), InvalidParameter);
  EXPECT_THROW(QnnBank({QnnCircuit({}, 1, 6), QnnCircuit({}, 1, 7)}), InvalidParameter);
  EXPECT_THROW(QnnBank({QnnCircuit({}, 2, 4)}), InvalidParameter);
  EXPECT_THROW(QnnBank::random(0, 2, 10, 1), InvalidParameter);
}
