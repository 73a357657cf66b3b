#include "vpe/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace vpe {

Mat3 hat3(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vex3(const Mat3& m, double tol) {
  const Mat3 sym = 0.5 * (m + m.transpose());
  if (sym.cwiseAbs().maxCoeff() > tol) {
    throw std::invalid_argument("vex3: matrix is not skew-symmetric within tolerance");
  }
  const Mat3 skew = 0.5 * (m - m.transpose());
  return Vec3(skew(2, 1), skew(0, 2), skew(1, 0));
}

Mat4 twist_matrix(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat3(xi.omega);
  m.topRightCorner<3, 1>() = xi.nu;
  return m;
}

Twist twist_from_matrix(const Mat4& m) {
  Twist xi;
  xi.omega = vex3(m.topLeftCorner<3, 3>());
  xi.nu = m.topRightCorner<3, 1>();
  return xi;
}

Rotation exp_so3(const Vec3& v) {
  const double theta = v.norm();
  const Mat3 vx = hat3(v);
  Mat3 r;
  if (theta < kSmallAngle) {
    r = Mat3::Identity() + vx + 0.5 * vx * vx;
  } else {
    const double s = std::sin(theta) / theta;
    const double c = (1.0 - std::cos(theta)) / (theta * theta);
    r = Mat3::Identity() + s * vx + c * vx * vx;
  }
  return Rotation::from_matrix_unchecked(r);
}

Vec3 log_so3(const Rotation& r) {
  const Mat3& m = r.matrix();
  // The skew part is sin(theta) * axis; atan2 of its norm against the trace
  // cosine keeps the angle well conditioned everywhere except the half turn.
  const Mat3 skew = 0.5 * (m - m.transpose());
  const Vec3 w(skew(2, 1), skew(0, 2), skew(1, 0));
  const double s = w.norm();
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);
  if (theta < kSmallAngle) {
    return w;  // first order; absolute error O(theta^3)
  }
  if (theta > M_PI - 1e-6) {
    // Near a half turn m + I ~= 2 a a^T; the largest column gives the axis
    // up to sign.
    const Mat3 b = m + Mat3::Identity();
    int col = 0;
    b.colwise().norm().maxCoeff(&col);
    Vec3 axis = b.col(col).normalized();
    int imax = 0;
    axis.cwiseAbs().maxCoeff(&imax);
    if (axis[imax] < 0.0) axis = -axis;
    if (s > 1e-9 && w.dot(axis) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / s) * w;
}

Mat3 so3_left_jacobian(const Vec3& v) {
  const double theta = v.norm();
  const Mat3 vx = hat3(v);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + 0.5 * vx + (1.0 / 6.0) * vx * vx;
  }
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() + a * vx + b * vx * vx;
}

Pose exp_se3(const Twist& xi, double dt) {
  const Vec3 w = dt * xi.omega;
  Pose g;
  g.rotation = exp_so3(w);
  g.translation = so3_left_jacobian(w) * (dt * xi.nu);
  return g;
}

Mat6 adjoint(const Pose& g) {
  Mat6 m = Mat6::Zero();
  const Mat3& r = g.rotation.matrix();
  m.topLeftCorner<3, 3>() = r;
  m.bottomRightCorner<3, 3>() = r;
  m.bottomLeftCorner<3, 3>() = hat3(g.translation) * r;
  return m;
}

Mat6 ad(const Twist& zeta) {
  Mat6 m = Mat6::Zero();
  const Mat3 wx = hat3(zeta.omega);
  m.topLeftCorner<3, 3>() = wx;
  m.bottomRightCorner<3, 3>() = wx;
  m.bottomLeftCorner<3, 3>() = hat3(zeta.nu);
  return m;
}

Mat6 coad(const Twist& zeta) { return ad(zeta).transpose(); }

double principal_angle(const Rotation& r) {
  const double c = 0.5 * (r.matrix().trace() - 1.0);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Rotation project_to_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return Rotation::from_matrix_unchecked(u * v.transpose());
}

}  // namespace vpe
