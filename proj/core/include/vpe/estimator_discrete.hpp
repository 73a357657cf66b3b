#pragma once

#include "vpe/estimator_continuous.hpp"
#include "vpe/types.hpp"

#include <stdexcept>

namespace vpe {

/// calJ = 1/2 trace(J) I - J; satisfies (J w)^x = w^x calJ + calJ w^x and
/// may be merely positive semidefinite.
Mat3 cal_j(const Mat3& J);

/// Thrown when the implicit rotation solve fails to meet tolerance (the
/// step size times the angular velocity is too large); the caller aborts
/// the step.
class SolveFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveFResult {
  Rotation F;
  int iterations{0};
};

/// Solves (J w)^x = (F calJ - calJ F^T) / dt for F in SO(3), Newton
/// iteration in the 3-parameter exponential chart with the residual
/// r(f) = vex((F calJ - calJ F^T)/dt - (J w)^x), forward-difference
/// Jacobian, initial guess f = dt w. Tolerance is on the Frobenius norm of
/// the matrix residual.
SolveFResult solve_F(const Mat3& J, const Vec3& omega, double dt, double tol = 1e-12,
                     int max_iters = 50);

/// Discrete filter state at step i.
struct LgviState {
  Pose g_hat{};
  Vec3 omega{Vec3::Zero()};    // attitude-error velocity
  Vec3 upsilon{Vec3::Zero()};  // translation-error velocity
  Twist xi_hat{};
  int step_index{0};

  Vec6 phi() const {
    Vec6 p;
    p << omega, upsilon;
    return p;
  }
};

/// First-order Lie group variational integrator form of the filter. The
/// per-step update, in order: F_i from the implicit rotation solve; pose
/// propagation with the stored twist estimate; then the translational and
/// rotational velocity-error updates, which use the *new* pose and the
/// new epoch's measurements:
///   (M + dt D_t) ups_{i+1} = F_i^T M ups_i - dt kappa y_{i+1}
///   (J + dt D_r) w_{i+1} = F_i^T J w_i + dt (M ups_{i+1}) x ups_{i+1}
///                          - dt kappa p_bar^x y_{i+1}
///                          - dt phi'(U_r0) S_Gamma(R_hat_{i+1})
/// and finally xi_hat_{i+1} = xi_m_{i+1} - Ad(g_hat_{i+1}^-1) phi_{i+1}.
/// Missing-measurement epochs zero the corresponding forcing blocks.
class LgviFilter {
 public:
  LgviFilter(GainSet gains, double dt);

  LgviState init(const Pose& g_hat0, const Twist& xi_hat0, const Twist& xi_m0) const;

  struct StepInfo {
    int newton_iterations{0};
  };

  LgviState step(const LgviState& s, const EpochInputs& next, StepInfo* info = nullptr) const;

  const GainSet& gains() const { return gains_; }
  double dt() const { return dt_; }

 private:
  GainSet gains_;
  double dt_;
  Mat3 m_dt_inv_;  // (M + dt D_t)^-1
  Mat3 j_dt_inv_;  // (J + dt D_r)^-1
};

}  // namespace vpe
