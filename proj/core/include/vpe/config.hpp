#pragma once

#include "vpe/estimator_continuous.hpp"
#include "vpe/sensors.hpp"
#include "vpe/truth.hpp"
#include "vpe/velocity.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpe {

/// Raised on schema violations; the message starts with the offending
/// field path (e.g. "gains.kappa: must be positive").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EstimatorKind { kLgvi, kContinuous };

/// Full description of one experiment. The JSON schema mirrors the field
/// grouping below; ExperimentConfig::case1() is the built-in default and
/// partial config files override it field by field.
struct ExperimentConfig {
  double dt{0.02};
  double truth_horizon{150.0};
  double estimator_horizon{20.0};
  std::uint64_t seed{1};
  VelocitySource velocity_source{VelocitySource::kOpticalOnly};
  EstimatorKind estimator_kind{EstimatorKind::kLgvi};
  int substeps{4};  // continuous-estimator substeps per measurement epoch

  double mass_grams{420.0};
  Vec3 inertia_grams_m2{51.2, 60.2, 59.6};
  WrenchFrame wrench_frame{WrenchFrame::kBody};

  Vec3 truth_attitude_axis{3.0 / 7.0, -6.0 / 7.0, 2.0 / 7.0};
  double truth_attitude_angle{M_PI / 4.0};
  Vec3 truth_position{2.5, 0.5, -3.0};
  Vec3 truth_omega{0.2, -0.05, 0.1};
  Vec3 truth_nu{-0.05, 0.15, 0.03};

  Vec3 est_attitude_axis{1.0, 0.0, 0.0};
  double est_attitude_angle{0.0};
  Vec3 est_position{0.0, 0.0, 0.0};
  Vec3 est_omega{0.1, 0.45, 0.05};
  Vec3 est_nu{2.05, 0.64, 1.29};

  Vec3 gain_J{0.9, 0.6, 0.3};
  Vec3 gain_M{0.0608, 0.0486, 0.0365};
  Vec3 gain_D_r{2.7, 2.2, 1.5};
  Vec3 gain_D_t{0.1, 0.12, 0.14};
  double kappa{1.0};
  Vec3 varsigma{3.0, 2.0, 1.0};
  double tail_weight{1.0};

  int camera_count{3};
  double camera_half_angle_deg{40.0};
  double camera_azimuth_offset_deg{0.0};

  double room_half_extent{5.0};
  std::vector<Vec3> inertial_directions{Vec3(0.0, 0.0, -1.0), Vec3(0.1, 0.975, -0.2)};

  double beacon_noise_width{0.001};
  double direction_noise_width{0.001};
  double velocity_noise_width{0.0};
  double twist_noise_width{0.001};
  PointVelocityMode velocity_mode{PointVelocityMode::kFiniteDifference};

  double filter_omega_n{2.0};
  double filter_mu{0.5};
  bool filter_direct_twist{true};

  std::string output_dir{};
  bool write_truth{false};
  bool write_measurements{false};

  static ExperimentConfig case1() { return ExperimentConfig{}; }
  static ExperimentConfig case2() {
    ExperimentConfig c;
    c.camera_half_angle_deg = 25.0;
    // The narrow field of view leaves beacon-free stretches; the rate gyro
    // carries the velocity estimate across them.
    c.velocity_source = VelocitySource::kGyroAided;
    return c;
  }
  static ExperimentConfig preset(const std::string& name);

  /// Parses JSON on top of `base`; unknown keys and malformed values raise
  /// ConfigError with the field path.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const ExperimentConfig& base = case1());
  static ExperimentConfig load(const std::string& path, const ExperimentConfig& base = case1());
  nlohmann::json to_json() const;

  /// Sets one field through its JSON path ("gains.kappa", "seed", ...).
  void apply_override(const std::string& field, const nlohmann::json& value);

  void validate() const;  // throws ConfigError

  // Materialized pieces.
  VehicleParams vehicle() const;
  World world() const;
  CameraRig rig() const;
  NoiseModel noise() const;
  GainSet gain_set() const;
  TruthState initial_truth() const;
  Pose initial_estimate_pose() const;
  Twist initial_estimate_twist() const;
  TwistPipelineConfig pipeline_config() const;
};

}  // namespace vpe
