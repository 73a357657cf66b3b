#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <stdexcept>

namespace vpe {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat4 = Eigen::Matrix4d;
using Mat3X = Eigen::Matrix3Xd;

/// Stacked body-frame velocities [Omega; nu] (rad/s, m/s).
struct Twist {
  Vec3 omega{Vec3::Zero()};
  Vec3 nu{Vec3::Zero()};

  Vec6 vec() const {
    Vec6 v;
    v << omega, nu;
    return v;
  }
  static Twist from_vec(const Vec6& v) { return Twist{v.head<3>(), v.tail<3>()}; }
};

/// Proper rotation matrix. Construction through from_matrix() enforces
/// R^T R = I and det R = +1 to 1e-12; the group operations and the
/// exponential map preserve this, so they build unchecked.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  static Rotation from_matrix(const Mat3& m) {
    Rotation r = from_matrix_unchecked(m);
    if (r.orthonormality_error() > kInvariantTol) {
      throw std::invalid_argument("Rotation::from_matrix: matrix is not a proper rotation");
    }
    return r;
  }

  static Rotation from_matrix_unchecked(const Mat3& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Mat3& matrix() const { return m_; }

  Rotation inverse() const { return from_matrix_unchecked(m_.transpose()); }
  Rotation transpose() const { return inverse(); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& o) const { return from_matrix_unchecked(m_ * o.m_); }

  /// max(|R^T R - I|_max, |det R - 1|); used by drift checks.
  double orthonormality_error() const {
    double ortho = (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff();
    double det = std::abs(m_.determinant() - 1.0);
    return std::max(ortho, det);
  }

  static constexpr double kInvariantTol = 1e-12;

 private:
  Mat3 m_;
};

/// Rigid transform g = (R, b): rotation body->reference and translation in
/// the reference frame (meters).
struct Pose {
  Rotation rotation;
  Vec3 translation{Vec3::Zero()};

  static Pose identity() { return Pose{}; }

  Pose inverse() const {
    Rotation rt = rotation.inverse();
    return Pose{rt, -(rt * translation)};
  }

  Pose operator*(const Pose& o) const {
    return Pose{rotation * o.rotation, rotation * o.translation + translation};
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

}  // namespace vpe
