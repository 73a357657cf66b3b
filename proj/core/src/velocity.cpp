#include "vpe/velocity.hpp"

#include "vpe/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace vpe {

ButterworthState butterworth_step(const ButterworthState& s, const Eigen::VectorXd& z_m_prev,
                                  const Eigen::VectorXd& z_m_next, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("butterworth_step: dt must be positive");
  const double wn = s.params.omega_n;
  const double mu = s.params.mu;
  const double den = 4.0 + 4.0 * mu * wn * dt + wn * wn * dt * dt;

  const Eigen::VectorXd zm = z_m_prev + z_m_next;
  ButterworthState next = s;
  next.z_f = ((4.0 + 4.0 * mu * wn * dt - wn * wn * dt * dt) * s.z_f + 4.0 * dt * s.z_f_dot +
              wn * wn * dt * dt * zm) /
             den;
  next.z_f_dot = (-4.0 * wn * wn * dt * s.z_f +
                  (4.0 - 4.0 * mu * wn * dt - wn * wn * dt * dt) * s.z_f_dot +
                  2.0 * wn * wn * dt * zm) /
                 den;
  next.z_f_ddot = wn * wn * (z_m_next - next.z_f) - 2.0 * mu * wn * next.z_f_dot;
  return next;
}

Eigen::Matrix<double, 3, 6> point_velocity_matrix(const Vec3& a) {
  Eigen::Matrix<double, 3, 6> g;
  g.leftCols<3>() = hat3(a);
  g.rightCols<3>() = -Mat3::Identity();
  return g;
}

std::optional<Twist> reconstruct_twist(const std::vector<Vec3>& points,
                                       const std::vector<Vec3>& velocities, double cond_limit) {
  const std::size_t j = points.size();
  if (j == 0 || velocities.size() != j) {
    throw std::invalid_argument("reconstruct_twist: need matching non-empty point/velocity lists");
  }
  Eigen::MatrixXd g(3 * j, 6);
  Eigen::VectorXd v(3 * j);
  for (std::size_t s = 0; s < j; ++s) {
    g.middleRows<3>(3 * static_cast<Eigen::Index>(s)) = point_velocity_matrix(points[s]);
    v.segment<3>(3 * static_cast<Eigen::Index>(s)) = velocities[s];
  }

  Vec6 xi;
  if (j >= 3) {
    const Eigen::MatrixXd gram = g.transpose() * g;  // 6x6
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin <= 0.0 || es.eigenvalues().maxCoeff() / lmin > cond_limit) return std::nullopt;
    xi = gram.ldlt().solve(g.transpose() * v);
  } else {
    // One or two points never determine all six twist components (with two,
    // rotation about their joining line is unobservable), so the stacked G
    // has structural rank 3j for j = 1 and 5 for j = 2. The rank-truncated
    // pseudo-inverse gives the minimum-norm least-squares solution; the
    // condition guard watches the singular values that should be there.
    const int structural_rank = j == 1 ? 3 : 5;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv(0);
    if (smax <= 0.0 || smax / sv(structural_rank - 1) > std::sqrt(cond_limit)) {
      return std::nullopt;
    }
    svd.setThreshold(1e-12);
    xi = svd.solve(v);
  }
  return Twist::from_vec(xi);
}

Vec3 nu_from_gyro(const std::vector<Vec3>& points, const std::vector<Vec3>& velocities,
                  const Vec3& omega) {
  const std::size_t j = points.size();
  if (j == 0 || velocities.size() != j) {
    throw std::invalid_argument("nu_from_gyro: need matching non-empty point/velocity lists");
  }
  Vec3 nu = Vec3::Zero();
  for (std::size_t s = 0; s < j; ++s) nu += points[s].cross(omega) - velocities[s];
  return nu / static_cast<double>(j);
}

TwistPipeline::TwistPipeline(TwistPipelineConfig cfg, double dt) : cfg_(cfg), dt_(dt) {}

void TwistPipeline::track(std::map<int, Tracked>& filters, int key, const Eigen::VectorXd& raw,
                          int epoch) {
  auto& f = filters[key];
  if (f.last_epoch != epoch - 1) {
    f.state = ButterworthState::initialized(raw, cfg_.filter);
  } else {
    f.state = butterworth_step(f.state, f.prev_raw, raw, dt_);
  }
  f.prev_raw = raw;
  f.last_epoch = epoch;
}

std::optional<Twist> TwistPipeline::step(const MeasurementSet& epoch) {
  const int e = epoch.epoch;

  if (cfg_.source == VelocitySource::kDirect) {
    if (epoch.xi_m) {
      if (!cfg_.filter_direct_twist) {
        last_ = *epoch.xi_m;
      } else {
        const Eigen::VectorXd raw = epoch.xi_m->vec();
        if (!twist_ || twist_->last_epoch != e - 1) {
          twist_ = Tracked{ButterworthState::initialized(raw, cfg_.filter), raw, e};
        } else {
          twist_->state = butterworth_step(twist_->state, twist_->prev_raw, raw, dt_);
          twist_->prev_raw = raw;
          twist_->last_epoch = e;
        }
        last_ = Twist::from_vec(twist_->state.z_f);
      }
    }
    return last_;
  }

  // Track per-beacon position and velocity channels.
  for (std::size_t s = 0; s < epoch.visible.size(); ++s) {
    const int idx = epoch.visible[s];
    track(pos_, idx, epoch.a_m[s], e);
    if (s < epoch.v_valid.size() && epoch.v_valid[s]) track(vel_, idx, epoch.v_m[s], e);
  }
  std::vector<Vec3> a_f, v_f;
  for (int idx : epoch.visible) {
    const auto pit = pos_.find(idx);
    const auto vit = vel_.find(idx);
    if (pit != pos_.end() && pit->second.last_epoch == e &&  //
        vit != vel_.end() && vit->second.last_epoch == e) {
      a_f.push_back(pit->second.state.z_f);
      v_f.push_back(vit->second.state.z_f);
    }
  }

  if (cfg_.source == VelocitySource::kGyroAided) {
    if (!epoch.omega_m) return last_;
    const Eigen::VectorXd raw = *epoch.omega_m;
    if (!gyro_ || gyro_->last_epoch != e - 1) {
      gyro_ = Tracked{ButterworthState::initialized(raw, cfg_.filter), raw, e};
    } else {
      gyro_->state = butterworth_step(gyro_->state, gyro_->prev_raw, raw, dt_);
      gyro_->prev_raw = raw;
      gyro_->last_epoch = e;
    }
    const Vec3 omega_f = gyro_->state.z_f;
    Twist xi;
    xi.omega = omega_f;
    if (!a_f.empty()) {
      xi.nu = nu_from_gyro(a_f, v_f, omega_f);
    } else if (last_) {
      xi.nu = last_->nu;  // no point velocities this epoch; hold translation
    } else {
      return std::nullopt;  // nothing translational yet
    }
    last_ = xi;
    return last_;
  }

  // Optical only.
  if (a_f.empty()) return last_;
  const auto xi = reconstruct_twist(a_f, v_f, cfg_.cond_limit);
  if (xi) last_ = *xi;
  return last_;
}

}  // namespace vpe
