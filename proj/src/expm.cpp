#include "cvqoc/errors.hpp"
#include "cvqoc/fock.hpp"

#include <array>
#include <cmath>

namespace cvqoc::fock {

namespace {

// Higham (2005) theta_13: largest 1-norm for which the [13/13] Pade
// approximant meets unit roundoff without scaling.
constexpr double kTheta13 = 5.371920351148152;

constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

}  // namespace

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("expm: matrix is not square");
  }
  if (!a.allFinite()) {
    throw InvalidParameter("expm: non-finite entries");
  }
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(n, n);
  if (a.isZero(0.0)) {
    return identity;
  }

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  }
  const Eigen::MatrixXcd scaled = a / std::ldexp(1.0, squarings);

  const Eigen::MatrixXcd a2 = scaled * scaled;
  const Eigen::MatrixXcd a4 = a2 * a2;
  const Eigen::MatrixXcd a6 = a4 * a2;
  const auto& b = kPade13;

  const Eigen::MatrixXcd u_inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
  const Eigen::MatrixXcd u =
      scaled * (a6 * u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * identity);
  const Eigen::MatrixXcd v_inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
  const Eigen::MatrixXcd v = a6 * v_inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * identity;

  Eigen::MatrixXcd result = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) {
    result = result * result;
  }
  return result;
}

}  // namespace cvqoc::fock
