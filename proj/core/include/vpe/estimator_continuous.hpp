#pragma once

#include "vpe/sensors.hpp"
#include "vpe/truth.hpp"
#include "vpe/types.hpp"
#include "vpe/wahba.hpp"

#include <functional>
#include <optional>

namespace vpe {

/// Estimator gains. J/M form the artificial inertia-like kernel
/// JJ = diag(J, M); D_r/D_t the dissipation DD = diag(D_r, D_t); kappa
/// weighs the translation residual. phi/phi_prime shape the rotational
/// potential (identity by default, matching the simulation presets).
struct GainSet {
  Mat3 J{Mat3::Identity()};
  Mat3 M{Mat3::Identity()};
  Mat3 D_r{Mat3::Identity()};
  Mat3 D_t{Mat3::Identity()};
  double kappa{1.0};
  WeightSpec weights{};
  std::function<double(double)> phi = [](double x) { return x; };
  std::function<double(double)> phi_prime = [](double) { return 1.0; };

  Mat6 inertia() const {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = J;
    m.bottomRightCorner<3, 3>() = M;
    return m;
  }
  Mat6 dissipation() const {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = D_r;
    m.bottomRightCorner<3, 3>() = D_t;
    return m;
  }
  bool valid() const;
};

/// Everything an estimator step needs from one measurement epoch: the
/// weighted vector-measurement set feeding the attitude residual, the
/// translation anchors, and the twist signal from the velocity pipeline.
struct EpochInputs {
  Mat3X D;
  Mat3X L_m;
  Eigen::MatrixXd W;
  bool has_attitude{false};  // at least one usable vector column
  bool has_position{false};  // beacon means available this epoch
  Vec3 p_bar{Vec3::Zero()};
  Vec3 a_bar_m{Vec3::Zero()};
  Twist xi_m{};
  Mat3 K{Mat3::Zero()};  // diagnostic; reused from the previous epoch on rank fallback
  Mat3 U_D{Mat3::Identity()};
  int n_beacons{0};
};

/// Applies the weight-selection rule to an epoch. When the full column set
/// is rank deficient the inertial columns (with their cross-product
/// augmentation) are retried; if that also fails, the attitude residual is
/// disabled for the epoch and prev_K is kept for diagnostics. The twist
/// field is left zero for the caller to fill.
EpochInputs make_epoch_inputs(const MeasurementSet& ms, const WeightSpec& spec,
                              const Mat3* prev_K = nullptr);

/// Filter state: pose estimate, velocity-error vector phi = [omega;
/// upsilon], and the derived twist estimate.
struct EstimatorState {
  Pose g_hat{};
  Vec6 phi{Vec6::Zero()};
  Twist xi_hat{};
};

/// Initial state from the configured pose/twist estimates and the first
/// twist measurement: phi = Ad_ghat (xi_m - xi_hat).
EstimatorState make_initial_state(const Pose& g_hat0, const Twist& xi_hat0, const Twist& xi_m0);

/// Gradient covector of the total measurement residual under reduced
/// variations: top block phi'(U_r0) S_Gamma(R_hat) + kappa p_bar^x y, bottom
/// block kappa y, with y = p_bar - R_hat a_bar_m - b_hat. Blocks whose
/// measurements are missing this epoch are zeroed.
Vec6 z_vector(const Pose& g_hat, const EpochInputs& in, const GainSet& gains);

struct Derivatives {
  Vec6 dphi{Vec6::Zero()};
  Twist xi_hat{};
};

/// Right-hand side of the filter ODE:
///   JJ dphi = ad*_phi JJ phi - Z - DD phi,   xi_hat = xi_m - Ad(g_hat^-1) phi,
/// and the pose moves along g_hat (xi_hat)^vee.
Derivatives rhs(const EstimatorState& s, const EpochInputs& in, const GainSet& gains);

/// One integration step (4-stage Runge-Kutta in a Lie-algebra chart around
/// the current pose, so the pose stays on SE(3) to machine precision).
/// Epoch data is held constant across the step.
EstimatorState integrate_step(const EstimatorState& s, const EpochInputs& in, const GainSet& gains,
                              double dt);

/// Morse-Lyapunov diagnostic 1/2 phi^T JJ phi + Phi(<I-Q, K>) + 1/2 kappa
/// y^T y evaluated against the true state (Q = R R_hat^T, x = b - Q b_hat,
/// y = Q^T x + (I - Q^T) p_bar). Needs the truth, so it is a test/analysis
/// quantity, not part of the filter.
double lyapunov_value(const EstimatorState& s, const TruthState& truth, const EpochInputs& in,
                      const GainSet& gains);

}  // namespace vpe
