#include "vpe/wahba.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace vpe {

std::optional<WahbaContext> select_weights(const Mat3X& D, const WeightSpec& spec,
                                           double rank_tol) {
  if (!spec.valid()) {
    throw std::invalid_argument("select_weights: weight spec must be strictly decreasing positive");
  }
  const Eigen::Index n = D.cols();
  if (n < 3) return std::nullopt;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Eigen::MatrixXd v = svd.matrixV();  // n x n
  const Vec3 sigma = svd.singularValues();
  if (sigma(2) <= rank_tol * sigma(0)) return std::nullopt;

  // Pin the sign convention: largest-magnitude entry of each U column
  // positive, compensating in V so D = U Sigma V^T still holds; then restore
  // det(U) = +1 with one paired flip of the last column.
  for (int i = 0; i < 3; ++i) {
    int imax = 0;
    u.col(i).cwiseAbs().maxCoeff(&imax);
    if (u(imax, i) < 0.0) {
      u.col(i) = -u.col(i);
      v.col(i) = -v.col(i);
    }
  }
  if (u.determinant() < 0.0) {
    u.col(2) = -u.col(2);
    v.col(2) = -v.col(2);
  }

  Eigen::VectorXd w0 = Eigen::VectorXd::Constant(n, spec.tail_weight);
  for (int i = 0; i < 3; ++i) w0(i) = spec.varsigma(i) / (sigma(i) * sigma(i));

  WahbaContext ctx;
  ctx.W = v * w0.asDiagonal() * v.transpose();
  ctx.K = u * spec.varsigma.asDiagonal() * u.transpose();
  ctx.U_D = u;
  ctx.sigma = sigma;
  ctx.varsigma = spec.varsigma;
  return ctx;
}

std::array<Rotation, 4> critical_rotations(const Mat3& U_D) {
  std::array<Rotation, 4> out;
  out[0] = Rotation::identity();
  for (int i = 0; i < 3; ++i) {
    const Vec3 u = U_D.col(i);
    out[i + 1] = Rotation::from_matrix_unchecked(2.0 * u * u.transpose() - Mat3::Identity());
  }
  return out;
}

double wahba_value(const Rotation& Q, const Mat3& K) {
  return ((Mat3::Identity() - Q.matrix()).transpose() * K).trace();
}

Vec3 s_K(const Rotation& Q, const Mat3& K) {
  const Mat3 m = K * Q.matrix() - Q.matrix().transpose() * K;
  // m is antisymmetric by construction; skip the vex3 symmetry check.
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Vec3 s_Gamma(const Rotation& R_hat, const Mat3X& L_m, const Mat3X& D, const Eigen::MatrixXd& W) {
  if (L_m.cols() != D.cols() || W.rows() != D.cols() || W.cols() != D.cols()) {
    throw std::invalid_argument("s_Gamma: inconsistent column counts");
  }
  const Mat3 gamma = D * W * L_m.transpose();
  const Mat3 m = gamma * R_hat.matrix().transpose() - R_hat.matrix() * gamma.transpose();
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

double rotational_residual(const Rotation& R_hat, const Mat3X& L_m, const Mat3X& D,
                           const Eigen::MatrixXd& W) {
  const Mat3X e = D - R_hat.matrix() * L_m;
  return 0.5 * (e.transpose() * e * W).trace();
}

}  // namespace vpe
