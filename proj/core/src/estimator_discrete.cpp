#include "vpe/estimator_discrete.hpp"

#include "vpe/geometry.hpp"

#include <cmath>

namespace vpe {

Mat3 cal_j(const Mat3& J) { return 0.5 * J.trace() * Mat3::Identity() - J; }

namespace {

Vec3 residual(const Mat3& calj, const Mat3& jw_hat, const Vec3& f, double dt) {
  const Mat3 fm = exp_so3(f).matrix();
  const Mat3 m = (fm * calj - calj * fm.transpose()) / dt - jw_hat;
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

}  // namespace

SolveFResult solve_F(const Mat3& J, const Vec3& omega, double dt, double tol, int max_iters) {
  if (dt <= 0.0) throw std::invalid_argument("solve_F: dt must be positive");
  const Mat3 calj = cal_j(J);
  const Mat3 jw_hat = hat3(J * omega);
  // Frobenius norm of the skew matrix residual is sqrt(2) times the norm of
  // its vex image.
  const double vec_tol = tol / std::sqrt(2.0);

  Vec3 f = dt * omega;
  Vec3 r = residual(calj, jw_hat, f, dt);
  int it = 0;
  while (r.norm() > vec_tol && it < max_iters) {
    Mat3 jac;
    const double eps = 1e-7 * std::max(1.0, f.norm());
    for (int c = 0; c < 3; ++c) {
      Vec3 fp = f;
      fp(c) += eps;
      jac.col(c) = (residual(calj, jw_hat, fp, dt) - r) / eps;
    }
    const Vec3 step = jac.fullPivLu().solve(r);
    f -= step;
    r = residual(calj, jw_hat, f, dt);
    ++it;
    if (step.norm() < 1e-16) break;
  }
  if (r.norm() > vec_tol) {
    throw SolveFailure("solve_F: no convergence after " + std::to_string(it) +
                       " iterations (dt * |omega| too large?)");
  }
  return SolveFResult{exp_so3(f), it};
}

LgviFilter::LgviFilter(GainSet gains, double dt) : gains_(std::move(gains)), dt_(dt) {
  if (dt_ <= 0.0) throw std::invalid_argument("LgviFilter: dt must be positive");
  m_dt_inv_ = (gains_.M + dt_ * gains_.D_t).inverse();
  j_dt_inv_ = (gains_.J + dt_ * gains_.D_r).inverse();
}

LgviState LgviFilter::init(const Pose& g_hat0, const Twist& xi_hat0, const Twist& xi_m0) const {
  LgviState s;
  s.g_hat = g_hat0;
  const Vec6 phi = adjoint(g_hat0) * (xi_m0.vec() - xi_hat0.vec());
  s.omega = phi.head<3>();
  s.upsilon = phi.tail<3>();
  s.xi_hat = xi_hat0;
  s.step_index = 0;
  return s;
}

LgviState LgviFilter::step(const LgviState& s, const EpochInputs& next, StepInfo* info) const {
  const SolveFResult fr = solve_F(gains_.J, s.omega, dt_);
  if (info) info->newton_iterations = fr.iterations;
  const Mat3 ft = fr.F.matrix().transpose();

  LgviState n;
  n.step_index = s.step_index + 1;
  n.g_hat = s.g_hat * exp_se3(s.xi_hat, dt_);

  Vec3 y = Vec3::Zero();
  if (next.has_position) {
    y = next.p_bar - n.g_hat.rotation * next.a_bar_m - n.g_hat.translation;
  }

  n.upsilon = m_dt_inv_ * (ft * (gains_.M * s.upsilon) - dt_ * gains_.kappa * y);

  Vec3 rot_forcing = ft * (gains_.J * s.omega);
  rot_forcing += dt_ * (gains_.M * n.upsilon).cross(n.upsilon);
  if (next.has_position) {
    rot_forcing -= dt_ * gains_.kappa * next.p_bar.cross(y);
  }
  if (next.has_attitude) {
    const double u0 = rotational_residual(n.g_hat.rotation, next.L_m, next.D, next.W);
    rot_forcing -=
        dt_ * gains_.phi_prime(u0) * s_Gamma(n.g_hat.rotation, next.L_m, next.D, next.W);
  }
  n.omega = j_dt_inv_ * rot_forcing;

  n.xi_hat = Twist::from_vec(next.xi_m.vec() - adjoint(n.g_hat.inverse()) * n.phi());
  return n;
}

}  // namespace vpe
