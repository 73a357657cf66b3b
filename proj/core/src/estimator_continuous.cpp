#include "vpe/estimator_continuous.hpp"

#include "vpe/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace vpe {

namespace {

bool symmetric_positive_definite(const Mat3& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

bool GainSet::valid() const {
  return symmetric_positive_definite(J) && symmetric_positive_definite(M) &&
         symmetric_positive_definite(D_r) && symmetric_positive_definite(D_t) && kappa > 0.0 &&
         weights.valid() && phi && phi_prime;
}

EpochInputs make_epoch_inputs(const MeasurementSet& ms, const WeightSpec& spec,
                              const Mat3* prev_K) {
  EpochInputs in;
  in.n_beacons = static_cast<int>(ms.visible.size());
  in.has_position = ms.has_beacons();
  if (in.has_position) {
    in.p_bar = ms.p_bar;
    in.a_bar_m = ms.a_bar_m;
  }
  if (prev_K) in.K = *prev_K;

  if (ms.D.cols() >= 3) {
    if (auto ctx = select_weights(ms.D, spec)) {
      in.D = ms.D;
      in.L_m = ms.L_m;
      in.W = ctx->W;
      in.K = ctx->K;
      in.U_D = ctx->U_D;
      in.has_attitude = true;
      return in;
    }
  }

  // Rank fallback: keep only the inertial columns (re-augmenting with their
  // cross product when there are exactly two) and retry; the previous K is
  // kept for diagnostics.
  std::vector<Vec3> d_cols, l_cols;
  for (std::size_t c = 0; c < ms.columns.size(); ++c) {
    if (ms.columns[c].kind == MeasurementColumn::Kind::kInertial) {
      d_cols.push_back(ms.D.col(static_cast<Eigen::Index>(c)));
      l_cols.push_back(ms.L_m.col(static_cast<Eigen::Index>(c)));
    }
  }
  if (d_cols.size() == 2) {
    d_cols.push_back(d_cols[0].cross(d_cols[1]));
    l_cols.push_back(l_cols[0].cross(l_cols[1]));
  }
  if (d_cols.empty()) return in;  // no attitude information this epoch

  Mat3X d(3, static_cast<Eigen::Index>(d_cols.size()));
  Mat3X l(3, static_cast<Eigen::Index>(l_cols.size()));
  for (std::size_t c = 0; c < d_cols.size(); ++c) {
    d.col(static_cast<Eigen::Index>(c)) = d_cols[c];
    l.col(static_cast<Eigen::Index>(c)) = l_cols[c];
  }
  in.D = d;
  in.L_m = l;
  if (auto ctx = select_weights(d, spec)) {
    in.W = ctx->W;
    in.U_D = ctx->U_D;
    if (!prev_K) in.K = ctx->K;
  } else {
    // Not enough independent vectors for the weight rule; fall back to a
    // uniform weight so the gradient still pulls toward the measured set.
    in.W = spec.tail_weight *
           Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d_cols.size()),
                                     static_cast<Eigen::Index>(d_cols.size()));
  }
  in.has_attitude = true;
  return in;
}

EstimatorState make_initial_state(const Pose& g_hat0, const Twist& xi_hat0, const Twist& xi_m0) {
  EstimatorState s;
  s.g_hat = g_hat0;
  s.phi = adjoint(g_hat0) * (xi_m0.vec() - xi_hat0.vec());
  s.xi_hat = xi_hat0;
  return s;
}

Vec6 z_vector(const Pose& g_hat, const EpochInputs& in, const GainSet& gains) {
  Vec6 z = Vec6::Zero();
  if (in.has_attitude) {
    const double u0 = rotational_residual(g_hat.rotation, in.L_m, in.D, in.W);
    z.head<3>() = gains.phi_prime(u0) * s_Gamma(g_hat.rotation, in.L_m, in.D, in.W);
  }
  if (in.has_position) {
    const Vec3 y = in.p_bar - g_hat.rotation * in.a_bar_m - g_hat.translation;
    z.head<3>() += gains.kappa * in.p_bar.cross(y);
    z.tail<3>() = gains.kappa * y;
  }
  return z;
}

Derivatives rhs(const EstimatorState& s, const EpochInputs& in, const GainSet& gains) {
  Derivatives d;
  const Twist phi_t = Twist::from_vec(s.phi);
  const Vec6 jphi = gains.inertia() * s.phi;
  const Vec6 z = z_vector(s.g_hat, in, gains);
  const Vec6 forcing = coad(phi_t) * jphi - z - gains.dissipation() * s.phi;
  d.dphi.head<3>() = gains.J.inverse() * forcing.head<3>();
  d.dphi.tail<3>() = gains.M.inverse() * forcing.tail<3>();
  d.xi_hat = Twist::from_vec(in.xi_m.vec() - adjoint(s.g_hat.inverse()) * s.phi);
  return d;
}

namespace {

// Truncated inverse-dexp for the body-frame kinematics dg = g xi^vee with
// g = g0 exp(theta): dtheta = xi + 1/2 [theta, xi] + 1/12 [theta, [theta, xi]].
Vec6 chart_rate(const Vec6& theta, const Vec6& xi) {
  const Mat6 ad_theta = ad(Twist::from_vec(theta));
  const Vec6 b1 = ad_theta * xi;
  return xi + 0.5 * b1 + (1.0 / 12.0) * (ad_theta * b1);
}

struct ChartDeriv {
  Vec6 dtheta;
  Vec6 dphi;
};

ChartDeriv eval(const Pose& g0, const Vec6& theta, const Vec6& phi, const EpochInputs& in,
                const GainSet& gains) {
  EstimatorState s;
  s.g_hat = g0 * exp_se3(Twist::from_vec(theta), 1.0);
  s.phi = phi;
  const Derivatives d = rhs(s, in, gains);
  return {chart_rate(theta, d.xi_hat.vec()), d.dphi};
}

}  // namespace

EstimatorState integrate_step(const EstimatorState& s, const EpochInputs& in, const GainSet& gains,
                              double dt) {
  const Vec6 theta0 = Vec6::Zero();
  const ChartDeriv k1 = eval(s.g_hat, theta0, s.phi, in, gains);
  const ChartDeriv k2 = eval(s.g_hat, 0.5 * dt * k1.dtheta, s.phi + 0.5 * dt * k1.dphi, in, gains);
  const ChartDeriv k3 = eval(s.g_hat, 0.5 * dt * k2.dtheta, s.phi + 0.5 * dt * k2.dphi, in, gains);
  const ChartDeriv k4 = eval(s.g_hat, dt * k3.dtheta, s.phi + dt * k3.dphi, in, gains);

  const Vec6 theta =
      (dt / 6.0) * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta);
  EstimatorState next;
  next.g_hat = s.g_hat * exp_se3(Twist::from_vec(theta), 1.0);
  next.phi = s.phi + (dt / 6.0) * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi);
  next.xi_hat = Twist::from_vec(in.xi_m.vec() - adjoint(next.g_hat.inverse()) * next.phi);
  return next;
}

double lyapunov_value(const EstimatorState& s, const TruthState& truth, const EpochInputs& in,
                      const GainSet& gains) {
  double v = 0.5 * s.phi.dot(gains.inertia() * s.phi);
  const Rotation q = truth.pose.rotation * s.g_hat.rotation.inverse();
  if (in.has_attitude) {
    v += gains.phi(wahba_value(q, in.K));
  }
  if (in.has_position) {
    const Vec3 x = truth.pose.translation - q * s.g_hat.translation;
    const Vec3 y = q.inverse() * x + (Mat3::Identity() - q.matrix().transpose()) * in.p_bar;
    v += 0.5 * gains.kappa * y.squaredNorm();
  }
  return v;
}

}  // namespace vpe
