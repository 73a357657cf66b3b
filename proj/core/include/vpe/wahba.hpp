#pragma once

#include "vpe/geometry.hpp"
#include "vpe/types.hpp"

#include <array>
#include <optional>

namespace vpe {

/// Weights for the attitude misalignment cost. The first three values must
/// be positive and strictly decreasing so the cost has distinct, isolated
/// critical rotations; tail_weight fills the remaining diagonal of W0 when
/// there are more than three measured vector columns.
struct WeightSpec {
  Vec3 varsigma{3.0, 2.0, 1.0};
  double tail_weight{1.0};

  bool valid() const {
    return varsigma.x() > varsigma.y() && varsigma.y() > varsigma.z() && varsigma.z() > 0.0 &&
           tail_weight > 0.0;
  }
};

/// Per-epoch weight matrix and derived quantities. K = D W D^T has
/// eigendecomposition U_D diag(varsigma) U_D^T by construction.
struct WahbaContext {
  Eigen::MatrixXd W;  // n x n, symmetric positive definite
  Mat3 K;
  Mat3 U_D;
  Vec3 sigma;  // singular values of D
  Vec3 varsigma;
};

/// Builds W = V_D W0 V_D^T from the SVD of D per the weight-selection rule
/// (w_i = varsigma_i / sigma_i^2 on the leading diagonal). Returns nullopt
/// when D is rank deficient (sigma_3 <= rank_tol * sigma_1).
///
/// The SVD sign convention is pinned so the returned U_D (and therefore the
/// critical rotations) is deterministic: each column's largest-magnitude
/// entry is made positive, then det(U_D) = +1 is restored by flipping the
/// last column pair if necessary.
std::optional<WahbaContext> select_weights(const Mat3X& D, const WeightSpec& spec,
                                           double rank_tol = 1e-9);

/// The four critical rotations {I, Q_1, Q_2, Q_3} of <I - Q, K>,
/// Q_i = 2 U I_i I_i^T U^T - I (half-turns about the columns of U).
std::array<Rotation, 4> critical_rotations(const Mat3& U_D);

/// Attitude misalignment cost <I - Q, K> = trace((I - Q)^T K).
double wahba_value(const Rotation& Q, const Mat3& K);

/// Gradient covector of wahba_value under the reduced variation
/// dQ = Q Sigma^x:  S_K(Q) = vex(K Q - Q^T K).
Vec3 s_K(const Rotation& Q, const Mat3& K);

/// Measured-data form of the same gradient: S_Gamma(R_hat) =
/// vex(Gamma R_hat^T - R_hat Gamma^T) with Gamma = D W (L_m)^T. Noise-free
/// it equals s_K(R R_hat^T, D W D^T).
Vec3 s_Gamma(const Rotation& R_hat, const Mat3X& L_m, const Mat3X& D, const Eigen::MatrixXd& W);

/// Rotational measurement residual 1/2 <D - R_hat L_m, (D - R_hat L_m) W>;
/// the argument fed to the gain shaping function.
double rotational_residual(const Rotation& R_hat, const Mat3X& L_m, const Mat3X& D,
                           const Eigen::MatrixXd& W);

}  // namespace vpe
