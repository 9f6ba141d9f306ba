#include "cvqoc/errors.hpp"
#include "cvqoc/lindblad.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cvqoc;
using namespace cvqoc::lindblad;

namespace {

Eigen::MatrixXcd random_matrix(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Eigen::MatrixXcd::NullaryExpr(d, d, [&] { return Complex(n(rng), n(rng)); });
}

Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64& rng) {
  const Eigen::MatrixXcd a = random_matrix(d, rng);
  return 0.5 * (a + a.adjoint());
}

Eigen::MatrixXcd random_density(int d, std::mt19937_64& rng) {
  const Eigen::MatrixXcd a = random_matrix(d, rng);
  const Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace().real();
}

// Direct complex evaluation of the master equation right-hand side.
Eigen::MatrixXcd master_rhs(const Eigen::MatrixXcd& h, const std::vector<JumpOperator>& jumps,
                            const Eigen::MatrixXcd& rho) {
  const Complex i(0.0, 1.0);
  Eigen::MatrixXcd out = -i * (h * rho - rho * h);
  for (const auto& j : jumps) {
    const Eigen::MatrixXcd ldl = j.op.adjoint() * j.op;
    out += j.rate * (j.op * rho * j.op.adjoint() - 0.5 * (ldl * rho + rho * ldl));
  }
  return out;
}

Eigen::MatrixXcd sigma(int d, int row, int col) {
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d, d);
  s(row, col) = 1.0;
  return s;
}

}  // namespace

TEST(RealDensityVector, RoundTripAndLayout) {
  std::mt19937_64 rng(1);
  for (int d : {2, 3, 4}) {
    const Eigen::MatrixXcd rho = random_density(d, rng);
    const Eigen::VectorXd x = to_real_vector(rho);
    ASSERT_EQ(x.size(), d * d);
    EXPECT_EQ(levels_for_dim(x.size()), d);
    EXPECT_NEAR(trace(x), 1.0, 1e-12);
    EXPECT_LT((to_density(x) - rho).norm(), 1e-14);
  }
  Eigen::Matrix2cd q;
  q << 0.3, Complex(0.1, -0.2), Complex(0.1, 0.2), 0.7;
  const Eigen::VectorXd x = to_real_vector(q);
  EXPECT_EQ(x, Eigen::Vector4d(0.3, 0.7, 0.1, -0.2));
  EXPECT_THROW(levels_for_dim(5), DimensionMismatch);
}

TEST(RealDensityVector, ReconstructionIsHermitian) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(9, [&] { return n(rng); });
  const Eigen::MatrixXcd rho = to_density(x);
  EXPECT_EQ((rho - rho.adjoint()).norm(), 0.0);
}

TEST(TwoLevelGenerator, MatchesDisplayedMatrix) {
  const TwoLevelParams p{0.1, 0.3, 1.0, 2.0};
  const Eigen::Matrix4d l = two_level_generator(p, 0.0);
  EXPECT_DOUBLE_EQ(l(2, 3), -4.0);
  EXPECT_DOUBLE_EQ(l(3, 2), 4.0);
  EXPECT_DOUBLE_EQ(l(2, 2), -0.2);
  Eigen::Matrix4d expected;
  expected << -0.1, 0.3, 0.0, -2.0,
              0.1, -0.3, 0.0, 2.0,
              0.0, 0.0, -0.2, -4.0,
              1.0, -1.0, 4.0, -0.2;
  EXPECT_EQ(l, expected);
}

TEST(TwoLevelGenerator, PopulationRowsCancel) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0), r(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const TwoLevelParams p{r(rng), r(rng), u(rng), u(rng)};
    const Eigen::Matrix4d l = two_level_generator(p, u(rng));
    EXPECT_EQ((l.row(0) + l.row(1)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(TwoLevelGenerator, AffineInControl) {
  const TwoLevelParams p{0.1, 0.3, 1.0, 2.0};
  const Eigen::Matrix4d diff = two_level_generator(p, 1.0) - two_level_generator(p, 0.0);
  Eigen::Matrix4d expected = Eigen::Matrix4d::Zero();
  expected(2, 3) = -1.0;
  expected(3, 2) = 1.0;
  EXPECT_EQ(diff, expected);
  EXPECT_EQ(two_level_generator_du(p), expected);
  EXPECT_EQ(two_level_generator_du(TwoLevelParams{0.5, 0.0, -3.0, 7.0}), expected);
  EXPECT_DOUBLE_EQ(two_level_generator_du(p).norm(), std::sqrt(2.0));
  const double h = 0.25;
  EXPECT_LT(((two_level_generator(p, 0.7 + h) - two_level_generator(p, 0.7 - h)) / (2 * h) - expected)
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
  for (double u : {-2.0, 0.5, 2.0}) {
    EXPECT_LT((two_level_generator(p, u) - two_level_generator(p, 0.0) - u * expected).norm(), 1e-15);
  }
  EXPECT_THROW(two_level_generator(p, NAN), InvalidParameter);
}

TEST(TwoLevelGenerator, AgreesWithGenericVectorizer) {
  const TwoLevelParams p{0.1, 0.3, 1.0, 2.0};
  for (double u : {-2.0, 0.0, 2.0}) {
    // Independently assembled Hamiltonian and jumps (g = 0, e = 1).
    const Eigen::MatrixXcd h = p.omega_x * (sigma(2, 1, 0) + sigma(2, 0, 1)) +
                               p.omega_z * (sigma(2, 1, 1) - sigma(2, 0, 0)) + u * sigma(2, 1, 1);
    const std::vector<JumpOperator> jumps{{sigma(2, 1, 0), p.gamma_eg}, {sigma(2, 0, 1), p.gamma_ge}};
    EXPECT_LT((lindblad_vectorize(h, jumps) - two_level_generator(p, u)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((lindblad_vectorize(two_level_hamiltonian(p, u), two_level_jumps(p)) -
               two_level_generator(p, u))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(ThreeLevelGenerator, ZeroHamiltonianIsZero) {
  EXPECT_EQ(three_level_generator(ThreeLevelParams{0.0, 0.0}, 0.0, 0.0), Eigen::MatrixXd::Zero(9, 9));
}

TEST(ThreeLevelGenerator, AgreesWithGenericVectorizer) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 10; ++i) {
    const ThreeLevelParams p{u(rng), u(rng)};
    const double up = u(rng), us = u(rng);
    // Levels 1, 2, 3 map to indices 0, 1, 2.
    const Eigen::MatrixXcd h = p.delta * sigma(3, 1, 1) + p.delta1 * sigma(3, 2, 2) +
                               0.5 * up * (sigma(3, 0, 2) + sigma(3, 2, 0)) +
                               0.5 * us * (sigma(3, 1, 2) + sigma(3, 2, 1));
    const Eigen::MatrixXd l = three_level_generator(p, up, us);
    EXPECT_LT((lindblad_vectorize(h, {}) - l).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((l.row(0) + l.row(1) + l.row(2)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(LindbladVectorize, MatchesDirectMasterEquation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rate(0.0, 1.0);
  for (int d : {2, 3, 4}) {
    const Eigen::MatrixXcd h = random_hermitian(d, rng);
    const std::vector<JumpOperator> jumps{{random_matrix(d, rng), rate(rng)},
                                          {random_matrix(d, rng), rate(rng)}};
    const Eigen::MatrixXd l = lindblad_vectorize(h, jumps);
    for (int trial = 0; trial < 3; ++trial) {
      const Eigen::MatrixXcd rho = random_density(d, rng);
      const Eigen::VectorXd expected = to_real_vector(master_rhs(h, jumps, rho));
      EXPECT_LT((l * to_real_vector(rho) - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
    double pop_sum_max = 0.0;
    for (Eigen::Index c = 0; c < l.cols(); ++c) {
      pop_sum_max = std::max(pop_sum_max, std::abs(l.col(c).head(d).sum()));
    }
    EXPECT_LT(pop_sum_max, 1e-12);
  }
}

TEST(LindbladVectorize, ZeroAndErrors) {
  EXPECT_EQ(lindblad_vectorize(Eigen::MatrixXcd::Zero(3, 3), {}), Eigen::MatrixXd::Zero(9, 9));
  Eigen::MatrixXcd nh = Eigen::MatrixXcd::Zero(2, 2);
  nh(0, 1) = 1.0;
  EXPECT_THROW(lindblad_vectorize(nh, {}), ContractViolation);
  EXPECT_THROW(lindblad_vectorize(Eigen::MatrixXcd::Zero(2, 2), {{sigma(2, 0, 1), -0.1}}),
               InvalidParameter);
  EXPECT_THROW(lindblad_vectorize(Eigen::MatrixXcd::Zero(2, 2), {{sigma(3, 0, 1), 0.1}}),
               DimensionMismatch);
}

TEST(SuperOperatorModel, GeneratorAndPopulationRows) {
  const TwoLevelParams p{0.1, 0.3, 1.0, 2.0};
  const SuperOperatorModel m = SuperOperatorModel::two_level(p);
  EXPECT_EQ(m.dim(), 4);
  EXPECT_EQ(m.n_controls(), 1u);
  EXPECT_LT((m.generator(Eigen::VectorXd::Constant(1, 1.3)) - two_level_generator(p, 1.3)).norm(), 1e-15);
  const SuperOperatorModel q = SuperOperatorModel::three_level(ThreeLevelParams{});
  EXPECT_EQ(q.dim(), 9);
  EXPECT_EQ(q.n_controls(), 2u);
  EXPECT_EQ(q.population_rows(), (std::vector<Eigen::Index>{0, 1, 2}));
  EXPECT_LT((q.generator(Eigen::Vector2d(0.4, -0.6)) - three_level_generator(ThreeLevelParams{}, 0.4, -0.6))
                .norm(),
            1e-14);
  EXPECT_THROW(m.generator(Eigen::Vector2d::Zero()), DimensionMismatch);
}

TEST(SuperOperatorModel, ThreeLevelJumpHook) {
  const ThreeLevelParams p{};
  const std::vector<JumpOperator> jumps{{sigma(3, 0, 2), 0.2}};
  const SuperOperatorModel m = SuperOperatorModel::three_level(p, jumps);
  const Eigen::MatrixXd expected = lindblad_vectorize(three_level_hamiltonian(p, 0.3, 0.2), jumps);
  EXPECT_LT((m.generator(Eigen::Vector2d(0.3, 0.2)) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PropagateRk4, FreeCoherenceRotationKeepsPopulations) {
  const SuperOperatorModel m = SuperOperatorModel::two_level(TwoLevelParams{0.0, 0.0, 0.0, 1.5});
  const Eigen::Vector4d x0(0.6, 0.4, 0.2, 0.1);
  const Trajectory tr = propagate_rk4(m, x0, [](double) { return Eigen::VectorXd::Zero(1); }, 0.0, 3.0, 300);
  ASSERT_EQ(tr.x.size(), 301u);
  EXPECT_DOUBLE_EQ(tr.t.back(), 3.0);
  for (const auto& x : tr.x) {
    EXPECT_NEAR(x(0), 0.6, 1e-14);
    EXPECT_NEAR(x(1), 0.4, 1e-14);
  }
}

TEST(PropagateRk4, RelaxationToRateEquilibrium) {
  const SuperOperatorModel m = SuperOperatorModel::two_level(TwoLevelParams{0.1, 0.3, 0.0, 0.0});
  const Eigen::Vector4d x0(0.0, 1.0, 0.0, 0.0);
  const auto zero = [](double) { return Eigen::VectorXd::Zero(1); };
  const Trajectory tr = propagate_rk4(m, x0, zero, 0.0, 10.0, 200);
  // rho_ee(t) = 0.25 + 0.75 exp(-0.4 t).
  for (std::size_t k = 0; k < tr.t.size(); k += 20) {
    EXPECT_NEAR(tr.x[k](1), 0.25 + 0.75 * std::exp(-0.4 * tr.t[k]), 1e-8);
  }
  const Trajectory longer = propagate_rk4(m, x0, zero, 0.0, 60.0, 1200);
  EXPECT_NEAR(longer.x.back()(0), 0.75, 1e-9);
  EXPECT_NEAR(longer.x.back()(1), 0.25, 1e-9);
}

TEST(PropagateRk4, FourthOrderConvergence) {
  const SuperOperatorModel m = SuperOperatorModel::two_level(TwoLevelParams{0.1, 0.3, 1.0, 2.0});
  const Eigen::Vector4d x0(1.0, 0.0, 0.0, 0.0);
  const auto u = [](double t) { return Eigen::VectorXd::Constant(1, std::sin(t)); };
  const auto end = [&](int n) { return propagate_rk4(m, x0, u, 0.0, 2.0, n).x.back(); };
  const Eigen::VectorXd a = end(40), b = end(80), c = end(160);
  const double ratio = (a - b).norm() / (b - c).norm();
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(PropagateRk4, TraceConservedUnderControl) {
  std::mt19937_64 rng(6);
  const SuperOperatorModel m = SuperOperatorModel::two_level(TwoLevelParams{0.1, 0.3, 1.0, 2.0});
  const Eigen::VectorXd x0 = to_real_vector(random_density(2, rng));
  const Trajectory tr = propagate_rk4(
      m, x0, [](double t) { return Eigen::VectorXd::Constant(1, 2.0 * std::cos(3.0 * t)); }, 0.0, 5.0, 500);
  for (const auto& x : tr.x) EXPECT_NEAR(trace(x), 1.0, 1e-9);
  const SuperOperatorModel q = SuperOperatorModel::three_level(ThreeLevelParams{});
  const Trajectory tq = propagate_rk4(q, to_real_vector(random_density(3, rng)),
                                      [](double t) { return Eigen::Vector2d(std::sin(t), 0.5); }, 0.0,
                                      4.0, 400);
  for (const auto& x : tq.x) EXPECT_NEAR(trace(x), 1.0, 1e-9);
}

TEST(PropagateRk4, Errors) {
  const SuperOperatorModel m = SuperOperatorModel::two_level(TwoLevelParams{});
  const Eigen::Vector4d x0(1.0, 0.0, 0.0, 0.0);
  const auto zero = [](double) { return Eigen::VectorXd::Zero(1); };
  EXPECT_THROW(propagate_rk4(m, x0, zero, 0.0, 1.0, 9), InvalidParameter);
  EXPECT_THROW(propagate_rk4(m, x0, zero, 1.0, 1.0, 10), InvalidParameter);
  EXPECT_THROW(propagate_rk4(m, Eigen::VectorXd::Zero(9), zero, 0.0, 1.0, 10), DimensionMismatch);
  EXPECT_THROW(propagate_rk4(m, x0, [](double) { return Eigen::VectorXd::Constant(1, NAN); }, 0.0, 1.0, 10),
               NumericalError);
}

TEST(Params, Validation) {
  EXPECT_THROW((TwoLevelParams{-0.1, 0.3, 1.0, 2.0}.validate()), InvalidParameter);
  EXPECT_NO_THROW((TwoLevelParams{0.0, 0.0, 1.0, 2.0}.validate()));
  EXPECT_THROW((ThreeLevelParams{NAN, 1.0}.validate()), InvalidParameter);
}
