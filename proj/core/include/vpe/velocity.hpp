#pragma once

#include "vpe/sensors.hpp"
#include "vpe/types.hpp"

#include <map>
#include <optional>
#include <vector>

namespace vpe {

struct FilterParams {
  double omega_n{2.0};  // natural (cutoff) frequency, rad/s
  double mu{0.5};       // damping ratio
};

/// State of the second-order low-pass filter
///   zdd_f + 2 mu w_n zd_f = w_n^2 (z_m - z_f).
struct ButterworthState {
  Eigen::VectorXd z_f;
  Eigen::VectorXd z_f_dot;
  Eigen::VectorXd z_f_ddot;
  FilterParams params;

  static ButterworthState initialized(const Eigen::VectorXd& z0, FilterParams p) {
    ButterworthState s;
    s.z_f = z0;
    s.z_f_dot = Eigen::VectorXd::Zero(z0.size());
    s.z_f_ddot = Eigen::VectorXd::Zero(z0.size());
    s.params = p;
    return s;
  }
};

/// One step of the implicit average-acceleration discretization of the
/// filter. The update is the closed-form 2x3 block matrix with common
/// denominator 4 + 4 mu w_n dt + (w_n dt)^2 acting on (z_f, zd_f,
/// z_m_prev + z_m_next); the acceleration state is recovered from the filter
/// equation at the new sample.
ButterworthState butterworth_step(const ButterworthState& s, const Eigen::VectorXd& z_m_prev,
                                  const Eigen::VectorXd& z_m_next, double dt);

/// Point-velocity kinematics matrix G(a) = [a^x  -I], so that the apparent
/// velocity of a body-frame point is v = G(a) xi. Full row rank for every a.
Eigen::Matrix<double, 3, 6> point_velocity_matrix(const Vec3& a);

/// Least-squares twist from stacked point velocities. With >= 3 points the
/// left pseudo-inverse (G^T G)^-1 G^T is used. With 1 or 2 points the system
/// is structurally rank deficient (two points leave the rotation about
/// their joining line unobservable), so the rank-truncated SVD
/// pseudo-inverse supplies the minimum-norm least-squares solution. Returns
/// nullopt when the observable part's Gram condition number exceeds
/// cond_limit (nearly collinear/coincident points).
std::optional<Twist> reconstruct_twist(const std::vector<Vec3>& points,
                                       const std::vector<Vec3>& velocities,
                                       double cond_limit = 1e12);

/// Translational velocity with a measured angular rate: the average over
/// points of a_j^x omega - v_j.
Vec3 nu_from_gyro(const std::vector<Vec3>& points, const std::vector<Vec3>& velocities,
                  const Vec3& omega);

enum class VelocitySource {
  kDirect,       // the full twist is measured
  kGyroAided,    // angular rate measured, translation from point velocities
  kOpticalOnly,  // everything from point positions/velocities
};

struct TwistPipelineConfig {
  VelocitySource source{VelocitySource::kOpticalOnly};
  FilterParams filter{};
  bool filter_direct_twist{true};  // pass direct measurements through the filter
  double cond_limit{1e12};
};

/// Produces the twist signal consumed by the estimator, per the configured
/// source. Beacon position/velocity channels are tracked per index and
/// filtered; a channel resets when its beacon re-enters the visible set
/// after a gap. On epochs with no usable information (no beacons in optical
/// mode, ill-conditioned geometry) the previous output is held; before any
/// output exists, step() returns nullopt.
class TwistPipeline {
 public:
  TwistPipeline(TwistPipelineConfig cfg, double dt);

  std::optional<Twist> step(const MeasurementSet& epoch);

  const std::optional<Twist>& last() const { return last_; }

 private:
  struct Tracked {
    ButterworthState state;
    Eigen::VectorXd prev_raw;
    int last_epoch{-2};
  };

  void track(std::map<int, Tracked>& filters, int key, const Eigen::VectorXd& raw, int epoch);

  TwistPipelineConfig cfg_;
  double dt_;
  std::map<int, Tracked> pos_;
  std::map<int, Tracked> vel_;
  std::optional<Tracked> gyro_;
  std::optional<Tracked> twist_;
  std::optional<Twist> last_;
};

}  // namespace vpe
