#pragma once

#include "vpe/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace vpe {

/// Physical parameters of the simulated vehicle, in SI. Configuration files
/// carry grams / gram-square-meters to match common vendor datasheets;
/// conversion happens once at load.
struct VehicleParams {
  double mass{1.0};              // kg
  Mat3 inertia{Mat3::Identity()};  // kg m^2

  static VehicleParams from_grams(double mass_grams, const Vec3& inertia_grams_m2) {
    VehicleParams p;
    p.mass = mass_grams * 1e-3;
    p.inertia = (inertia_grams_m2 * 1e-3).asDiagonal();
    return p;
  }
};

/// Frame in which the external wrench is expressed.
enum class WrenchFrame { kBody, kInertial };

struct Wrench {
  Vec3 force{Vec3::Zero()};   // N
  Vec3 torque{Vec3::Zero()};  // N m
};

using WrenchFn = std::function<Wrench(double)>;

/// The slowly varying force/torque profile used by the simulation presets:
/// force 1e-3 [10 cos(0.1 t), 2 sin(0.2 t), -2 sin(0.5 t)] N and torque
/// 1e-6 times that force, in N m.
Wrench wrench_profile(double t);

struct TruthState {
  Pose pose;
  Twist twist;
  double time{0.0};
};

/// One step of rigid-body Newton-Euler dynamics in the body frame:
///   Jv dOmega = (Jv Omega) x Omega + tau,   m (dnu + Omega x nu) = f.
/// Velocities advance with a classical 4-stage explicit integrator, the pose
/// with the exact group update pose * exp_se3(twist_at_step_start, dt).
/// With frame == kInertial the wrench is rotated into the body frame using
/// the step-start attitude.
TruthState truth_step(const TruthState& s, const VehicleParams& params, double dt,
                      WrenchFrame frame = WrenchFrame::kBody,
                      const WrenchFn& wrench = wrench_profile);

/// N + 1 samples over horizon = N dt. Deterministic.
std::vector<TruthState> simulate_truth(const VehicleParams& params, const TruthState& initial,
                                       double dt, double horizon,
                                       WrenchFrame frame = WrenchFrame::kBody,
                                       const WrenchFn& wrench = wrench_profile);

/// CSV export: t, R row-major (9 cols), b (3), Omega (3), nu (3).
void write_trajectory_csv(const std::string& path, const std::vector<TruthState>& traj);

}  // namespace vpe
