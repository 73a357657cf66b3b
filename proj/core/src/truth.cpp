#include "vpe/truth.hpp"

#include "vpe/csv.hpp"
#include "vpe/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace vpe {

Wrench wrench_profile(double t) {
  Wrench w;
  w.force = 1e-3 * Vec3(10.0 * std::cos(0.1 * t), 2.0 * std::sin(0.2 * t), -2.0 * std::sin(0.5 * t));
  w.torque = 1e-6 * w.force;
  return w;
}

namespace {

Vec6 body_accel(const VehicleParams& p, const Mat3& inertia_inv, const Vec6& xi, const Wrench& w) {
  const Vec3 omega = xi.head<3>();
  const Vec3 nu = xi.tail<3>();
  Vec6 dxi;
  dxi.head<3>() = inertia_inv * ((p.inertia * omega).cross(omega) + w.torque);
  dxi.tail<3>() = w.force / p.mass - omega.cross(nu);
  return dxi;
}

}  // namespace

TruthState truth_step(const TruthState& s, const VehicleParams& params, double dt,
                      WrenchFrame frame, const WrenchFn& wrench) {
  if (dt <= 0.0) throw std::invalid_argument("truth_step: dt must be positive");

  const Mat3 inertia_inv = params.inertia.inverse();
  const Mat3 rt = s.pose.rotation.matrix().transpose();
  auto body_wrench = [&](double t) {
    Wrench w = wrench(t);
    if (frame == WrenchFrame::kInertial) {
      w.force = rt * w.force;
      w.torque = rt * w.torque;
    }
    return w;
  };

  // Classical 4-stage step for the velocities.
  const Vec6 xi0 = s.twist.vec();
  const Vec6 k1 = body_accel(params, inertia_inv, xi0, body_wrench(s.time));
  const Vec6 k2 = body_accel(params, inertia_inv, xi0 + 0.5 * dt * k1, body_wrench(s.time + 0.5 * dt));
  const Vec6 k3 = body_accel(params, inertia_inv, xi0 + 0.5 * dt * k2, body_wrench(s.time + 0.5 * dt));
  const Vec6 k4 = body_accel(params, inertia_inv, xi0 + dt * k3, body_wrench(s.time + dt));

  TruthState next;
  next.twist = Twist::from_vec(xi0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  next.pose = s.pose * exp_se3(s.twist, dt);
  next.time = s.time + dt;
  return next;
}

std::vector<TruthState> simulate_truth(const VehicleParams& params, const TruthState& initial,
                                       double dt, double horizon, WrenchFrame frame,
                                       const WrenchFn& wrench) {
  if (dt <= 0.0) throw std::invalid_argument("simulate_truth: dt must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<TruthState> traj;
  traj.reserve(steps + 1);
  traj.push_back(initial);
  for (std::size_t i = 0; i < steps; ++i) {
    traj.push_back(truth_step(traj.back(), params, dt, frame, wrench));
  }
  return traj;
}

void write_trajectory_csv(const std::string& path, const std::vector<TruthState>& traj) {
  CsvWriter csv(path);
  csv.header({"t", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22",  //
              "bx", "by", "bz", "wx", "wy", "wz", "vx", "vy", "vz"});
  for (const auto& s : traj) {
    csv.begin_row();
    csv.field(s.time);
    const Mat3& r = s.pose.rotation.matrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) csv.field(r(i, j));
    for (int i = 0; i < 3; ++i) csv.field(s.pose.translation(i));
    for (int i = 0; i < 3; ++i) csv.field(s.twist.omega(i));
    for (int i = 0; i < 3; ++i) csv.field(s.twist.nu(i));
    csv.end_row();
  }
}

}  // namespace vpe
