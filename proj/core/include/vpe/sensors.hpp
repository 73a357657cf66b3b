#pragma once

#include "vpe/truth.hpp"
#include "vpe/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vpe {

/// Deterministic counter-based random stream. Each (seed, epoch) pair opens
/// an independent stream, so epochs can be generated in any order or in
/// parallel with reproducible output. splitmix64 underneath; doubles take
/// the top 53 bits, keeping results identical across platforms.
class NoiseRng {
 public:
  NoiseRng(std::uint64_t seed, std::uint64_t stream);
  double uniform01();                    // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)

 private:
  std::uint64_t state_;
  std::uint64_t next_u64();
};

/// One sample from the normalized bump density ~ exp(-1/(1-(x/w)^2)) on
/// (-w, w), by rejection. width == 0 returns exactly 0.
double sample_bump(double width, NoiseRng& rng);
Vec3 sample_bump3(double width, NoiseRng& rng);

struct Beacon {
  int index{};
  Vec3 position{Vec3::Zero()};  // frame O, meters
};

struct World {
  std::vector<Beacon> beacons;             // unique indices
  std::vector<Vec3> inertial_directions;   // unit vectors in frame O

  /// Beacons at the 8 vertices of a cube of half-extent h centered at the
  /// origin, indexed 0..7.
  static World cube_room(double half_extent, std::vector<Vec3> inertial_directions);
};

struct Camera {
  Vec3 mount{Vec3::Zero()};        // s^k, frame S, meters
  Vec3 boresight{Vec3::UnitX()};   // unit, frame S
  double half_angle{0.6981317007977318};  // radians
};

struct CameraRig {
  std::vector<Camera> cameras;

  /// `count` cameras on the body horizontal plane, evenly spaced about +z
  /// starting from +x (rotated by azimuth_offset), all mounted at the body
  /// origin.
  static CameraRig horizontal_ring(int count, double half_angle, double azimuth_offset = 0.0);
};

struct NoiseModel {
  double beacon_width{0.0};     // m, bump width on optical position vectors
  double direction_width{0.0};  // dimensionless perturbation of unit vectors
  double velocity_width{0.0};   // m/s, exact-velocity mode only
  double twist_width{0.0};      // per-axis width on gyro / direct twist
  std::uint64_t seed{0};
};

/// How the per-point velocities v_j^m are produced.
enum class PointVelocityMode {
  kFiniteDifference,  // (a_j^m(t_i) - a_j^m(t_{i-1})) / dt, needs two consecutive sightings
  kExactPlusNoise,    // G(a_j) xi + bump noise
};

struct MeasurementColumn {
  enum class Kind { kPair, kInertial, kCross };
  Kind kind{};
  int first{-1};   // beacon/direction index
  int second{-1};  // second beacon of a pair
};

/// One epoch of sensor data. Column k of D (reference vectors, frame O)
/// corresponds to column k of L_m (measured vectors, frame S).
struct MeasurementSet {
  int epoch{0};
  double t{0.0};

  std::vector<int> visible;  // index set, sorted ascending
  std::vector<Vec3> a_m;     // measured beacon positions, frame S (aligned with visible)
  std::vector<Vec3> p;       // known beacon positions, frame O (aligned with visible)
  Vec3 p_bar{Vec3::Zero()};  // mean of p over the visible set
  Vec3 a_bar_m{Vec3::Zero()};

  Mat3X D;   // 3 x n
  Mat3X L_m; // 3 x n
  std::vector<MeasurementColumn> columns;
  int beta{0};  // number of inertial columns

  std::vector<Vec3> v_m;       // point velocities (aligned with visible)
  std::vector<bool> v_valid;   // finite differences need a previous sighting

  std::optional<Vec3> omega_m;  // rate gyro
  std::optional<Twist> xi_m;    // direct twist measurement

  bool has_beacons() const { return !visible.empty(); }
  int pair_count() const {
    const int j = static_cast<int>(visible.size());
    return j * (j - 1) / 2;
  }
  /// At least two vector measurements this instant (the TRIAD condition).
  bool attitude_determined() const { return pair_count() + beta >= 2; }
};

/// Index set of beacons inside at least one camera cone: beacon j is seen by
/// camera k when the body-frame ray from the camera mount to
/// a_j = R^T (p_j - b) makes at most half_angle with the boresight.
std::vector<int> visible_beacons(const Pose& pose, const World& world, const CameraRig& rig);

/// Builds the full epoch: noisy beacon vectors, their means, the paired
/// relative-position columns for every lambda < ell in the visible set, the
/// inertial direction columns, and the cross-product augmentation column
/// when exactly two vectors are available. Point velocities are filled in
/// exact mode; finite-difference velocities are the simulator's job.
MeasurementSet measure_epoch(const TruthState& truth, const World& world, const CameraRig& rig,
                             const NoiseModel& noise, int epoch_index,
                             PointVelocityMode mode = PointVelocityMode::kFiniteDifference);

/// Stateful wrapper that adds finite-difference point velocities (a beacon
/// contributes one starting from its second consecutive sighting) plus the
/// gyro and direct-twist channels.
class SensorSimulator {
 public:
  SensorSimulator(World world, CameraRig rig, NoiseModel noise, PointVelocityMode mode, double dt);

  MeasurementSet step(const TruthState& truth);

  const World& world() const { return world_; }

 private:
  World world_;
  CameraRig rig_;
  NoiseModel noise_;
  PointVelocityMode mode_;
  double dt_;
  int epoch_{0};
  std::map<int, Vec3> prev_a_;  // previous a_j^m per beacon
  std::map<int, int> prev_epoch_;
};

/// Measurement log CSV: one row per column-vector and per raw beacon sighting,
/// with epoch, time, kind in {beacon, pair, inertial, cross}, indices, body
/// vector and reference vector. Beacon rows carry a_j^m / p_j; the rest carry
/// the L_m / D column pair.
void write_measurement_log(const std::string& path, const std::vector<MeasurementSet>& epochs);

/// Rebuilds epochs from a measurement log written by write_measurement_log.
/// Point velocities are reconstructed by finite differences across epochs
/// (dt taken from the time column), matching the live pipeline.
std::vector<MeasurementSet> read_measurement_log(const std::string& path);

}  // namespace vpe
