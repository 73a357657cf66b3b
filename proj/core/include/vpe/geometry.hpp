#pragma once

#include "vpe/types.hpp"

namespace vpe {

/// Below this angle the exponential/Jacobian formulas switch to their
/// truncated series to avoid cancellation in (1-cos)/theta^2 and friends.
inline constexpr double kSmallAngle = 1e-8;

/// Skew-symmetric cross-product matrix: hat3(v) * w == v x w.
Mat3 hat3(const Vec3& v);

/// Inverse of hat3. The input must be skew-symmetric within `tol`
/// (max abs entry of the symmetric part); the symmetric part is discarded
/// after the check. Throws std::invalid_argument otherwise.
Vec3 vex3(const Mat3& m, double tol = 1e-9);

/// se(3) element [Omega^x nu; 0 0] as a 4x4 matrix.
Mat4 twist_matrix(const Twist& xi);

/// Block extraction inverse of twist_matrix (no skewness check on the
/// rotational block other than vex3's).
Twist twist_from_matrix(const Mat4& m);

/// Rodrigues exponential; second-order series below kSmallAngle.
Rotation exp_so3(const Vec3& v);

/// Principal logarithm of a rotation (angle in [0, pi]). At pi the axis
/// sign is fixed by making its largest-magnitude component positive.
Vec3 log_so3(const Rotation& r);

/// Left Jacobian of SO(3): d/dt exp(v t)|translation coupling term.
Mat3 so3_left_jacobian(const Vec3& v);

/// Closed-form SE(3) exponential of dt * xi: rotation by Rodrigues,
/// translation through the left Jacobian applied to dt * nu.
Pose exp_se3(const Twist& xi, double dt);

/// Adjoint of a pose: [R 0; b^x R  R].
Mat6 adjoint(const Pose& g);

/// Little adjoint of a twist: [w^x 0; v^x w^x].
Mat6 ad(const Twist& zeta);

/// Co-adjoint, ad(zeta)^T.
Mat6 coad(const Twist& zeta);

/// Rotation angle arccos((trace R - 1)/2), argument clamped to [-1, 1].
double principal_angle(const Rotation& r);

/// Nearest rotation in Frobenius norm (polar projection via SVD). Intended
/// for explicit re-orthonormalization when a drift check fails; nothing in
/// this library calls it silently.
Rotation project_to_rotation(const Mat3& m);

}  // namespace vpe
