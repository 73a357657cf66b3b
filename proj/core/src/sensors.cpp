#include "vpe/sensors.hpp"

#include "vpe/csv.hpp"
#include "vpe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vpe {

NoiseRng::NoiseRng(std::uint64_t seed, std::uint64_t stream)
    : state_(seed + 0x9E3779B97F4A7C15ull * (stream + 1)) {
  next_u64();
  next_u64();
}

std::uint64_t NoiseRng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double NoiseRng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double NoiseRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double sample_bump(double width, NoiseRng& rng) {
  if (width <= 0.0) return 0.0;
  // Density ~ exp(-1/(1-u^2)) on (-1, 1), peak exp(-1) at 0; rejection
  // against a uniform envelope accepts ~60% of draws.
  for (;;) {
    const double u = rng.uniform(-1.0, 1.0);
    const double d = 1.0 - u * u;
    if (d <= 0.0) continue;
    if (rng.uniform01() <= std::exp(1.0 - 1.0 / d)) return width * u;
  }
}

Vec3 sample_bump3(double width, NoiseRng& rng) {
  Vec3 v;
  for (int i = 0; i < 3; ++i) v(i) = sample_bump(width, rng);
  return v;
}

World World::cube_room(double half_extent, std::vector<Vec3> inertial_directions) {
  World w;
  int idx = 0;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      for (double sz : {-1.0, 1.0}) {
        w.beacons.push_back({idx++, half_extent * Vec3(sx, sy, sz)});
      }
  w.inertial_directions = std::move(inertial_directions);
  for (auto& d : w.inertial_directions) d.normalize();
  return w;
}

CameraRig CameraRig::horizontal_ring(int count, double half_angle, double azimuth_offset) {
  CameraRig rig;
  for (int k = 0; k < count; ++k) {
    const double az = azimuth_offset + 2.0 * M_PI * k / count;
    Camera c;
    c.mount = Vec3::Zero();
    c.boresight = Vec3(std::cos(az), std::sin(az), 0.0);
    c.half_angle = half_angle;
    rig.cameras.push_back(c);
  }
  return rig;
}

std::vector<int> visible_beacons(const Pose& pose, const World& world, const CameraRig& rig) {
  std::vector<int> out;
  const Mat3 rt = pose.rotation.matrix().transpose();
  for (const auto& beacon : world.beacons) {
    const Vec3 a = rt * (beacon.position - pose.translation);
    bool seen = false;
    for (const auto& cam : rig.cameras) {
      const Vec3 ray = a - cam.mount;
      const double n = ray.norm();
      if (n <= 0.0) continue;
      const double c = ray.dot(cam.boresight) / n;
      if (std::acos(std::clamp(c, -1.0, 1.0)) <= cam.half_angle) {
        seen = true;
        break;
      }
    }
    if (seen) out.push_back(beacon.index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

MeasurementSet measure_epoch(const TruthState& truth, const World& world, const CameraRig& rig,
                             const NoiseModel& noise, int epoch_index, PointVelocityMode mode) {
  MeasurementSet ms;
  ms.epoch = epoch_index;
  ms.t = truth.time;

  NoiseRng rng(noise.seed, static_cast<std::uint64_t>(epoch_index));
  const Mat3 rt = truth.pose.rotation.matrix().transpose();
  const Vec3& b = truth.pose.translation;

  ms.visible = visible_beacons(truth.pose, world, rig);
  std::vector<Vec3> a_true;
  for (int idx : ms.visible) {
    const auto it = std::find_if(world.beacons.begin(), world.beacons.end(),
                                 [idx](const Beacon& bc) { return bc.index == idx; });
    const Vec3 a = rt * (it->position - b);
    a_true.push_back(a);
    ms.a_m.push_back(a + sample_bump3(noise.beacon_width, rng));
    ms.p.push_back(it->position);
  }
  const int j = static_cast<int>(ms.visible.size());
  if (j > 0) {
    Vec3 psum = Vec3::Zero(), asum = Vec3::Zero();
    for (int s = 0; s < j; ++s) {
      psum += ms.p[s];
      asum += ms.a_m[s];
    }
    ms.p_bar = psum / j;
    ms.a_bar_m = asum / j;
  }

  // Vector columns: beacon pairs (lambda < ell in index order), then the
  // inertial directions, then the cross-product augmentation when only two
  // vectors are available.
  std::vector<Vec3> d_cols, l_cols;
  for (int s1 = 0; s1 < j; ++s1) {
    for (int s2 = s1 + 1; s2 < j; ++s2) {
      d_cols.push_back(ms.p[s1] - ms.p[s2]);
      l_cols.push_back(ms.a_m[s1] - ms.a_m[s2]);
      ms.columns.push_back({MeasurementColumn::Kind::kPair, ms.visible[s1], ms.visible[s2]});
    }
  }
  ms.beta = static_cast<int>(world.inertial_directions.size());
  for (int di = 0; di < ms.beta; ++di) {
    const Vec3& d = world.inertial_directions[di];
    Vec3 l = rt * d;
    if (noise.direction_width > 0.0) {
      l = (l + sample_bump3(noise.direction_width, rng)).normalized();
    }
    d_cols.push_back(d);
    l_cols.push_back(l);
    ms.columns.push_back({MeasurementColumn::Kind::kInertial, di, -1});
  }
  if (static_cast<int>(d_cols.size()) == 2) {
    d_cols.push_back(d_cols[0].cross(d_cols[1]));
    l_cols.push_back(l_cols[0].cross(l_cols[1]));
    ms.columns.push_back({MeasurementColumn::Kind::kCross, -1, -1});
  }
  ms.D.resize(3, static_cast<Eigen::Index>(d_cols.size()));
  ms.L_m.resize(3, static_cast<Eigen::Index>(l_cols.size()));
  for (std::size_t c = 0; c < d_cols.size(); ++c) {
    ms.D.col(static_cast<Eigen::Index>(c)) = d_cols[c];
    ms.L_m.col(static_cast<Eigen::Index>(c)) = l_cols[c];
  }

  ms.v_m.assign(j, Vec3::Zero());
  ms.v_valid.assign(j, false);
  if (mode == PointVelocityMode::kExactPlusNoise) {
    for (int s = 0; s < j; ++s) {
      const Vec3 v = a_true[s].cross(truth.twist.omega) - truth.twist.nu;
      ms.v_m[s] = v + sample_bump3(noise.velocity_width, rng);
      ms.v_valid[s] = true;
    }
  }

  ms.omega_m = truth.twist.omega + sample_bump3(noise.twist_width, rng);
  Twist xi = truth.twist;
  xi.omega += sample_bump3(noise.twist_width, rng);
  xi.nu += sample_bump3(noise.twist_width, rng);
  ms.xi_m = xi;
  return ms;
}

SensorSimulator::SensorSimulator(World world, CameraRig rig, NoiseModel noise,
                                 PointVelocityMode mode, double dt)
    : world_(std::move(world)), rig_(std::move(rig)), noise_(noise), mode_(mode), dt_(dt) {}

MeasurementSet SensorSimulator::step(const TruthState& truth) {
  MeasurementSet ms = measure_epoch(truth, world_, rig_, noise_, epoch_, mode_);
  if (mode_ == PointVelocityMode::kFiniteDifference) {
    for (std::size_t s = 0; s < ms.visible.size(); ++s) {
      const int idx = ms.visible[s];
      const auto it = prev_epoch_.find(idx);
      if (it != prev_epoch_.end() && it->second == epoch_ - 1) {
        ms.v_m[s] = (ms.a_m[s] - prev_a_[idx]) / dt_;
        ms.v_valid[s] = true;
      }
    }
  }
  for (std::size_t s = 0; s < ms.visible.size(); ++s) {
    prev_a_[ms.visible[s]] = ms.a_m[s];
    prev_epoch_[ms.visible[s]] = epoch_;
  }
  ++epoch_;
  return ms;
}

namespace {

const char* kind_name(MeasurementColumn::Kind k) {
  switch (k) {
    case MeasurementColumn::Kind::kPair:
      return "pair";
    case MeasurementColumn::Kind::kInertial:
      return "inertial";
    case MeasurementColumn::Kind::kCross:
      return "cross";
  }
  return "?";
}

}  // namespace

void write_measurement_log(const std::string& path, const std::vector<MeasurementSet>& epochs) {
  CsvWriter csv(path);
  csv.header({"epoch", "t", "kind", "i", "j", "bx", "by", "bz", "rx", "ry", "rz"});
  auto row = [&](int epoch, double t, const std::string& kind, int i, int j, const Vec3& body,
                 const Vec3& ref) {
    csv.begin_row();
    csv.field(epoch);
    csv.field(t);
    csv.field(kind);
    csv.field(i);
    csv.field(j);
    for (int k = 0; k < 3; ++k) csv.field(body(k));
    for (int k = 0; k < 3; ++k) csv.field(ref(k));
    csv.end_row();
  };
  for (const auto& ms : epochs) {
    for (std::size_t s = 0; s < ms.visible.size(); ++s) {
      row(ms.epoch, ms.t, "beacon", ms.visible[s], -1, ms.a_m[s], ms.p[s]);
    }
    for (std::size_t c = 0; c < ms.columns.size(); ++c) {
      const auto& col = ms.columns[c];
      row(ms.epoch, ms.t, kind_name(col.kind), col.first, col.second,
          ms.L_m.col(static_cast<Eigen::Index>(c)), ms.D.col(static_cast<Eigen::Index>(c)));
    }
  }
}

std::vector<MeasurementSet> read_measurement_log(const std::string& path) {
  const auto rows = read_csv(path);
  std::vector<MeasurementSet> epochs;
  auto epoch_for = [&](int e, double t) -> MeasurementSet& {
    if (epochs.empty() || epochs.back().epoch != e) {
      MeasurementSet ms;
      ms.epoch = e;
      ms.t = t;
      epochs.push_back(std::move(ms));
    }
    return epochs.back();
  };
  struct Col {
    MeasurementColumn meta;
    Vec3 body, ref;
  };
  std::map<int, std::vector<Col>> cols_by_epoch;
  for (const auto& r : rows) {
    if (r.size() != 11) throw std::runtime_error("read_measurement_log: malformed row");
    const int e = std::stoi(r[0]);
    const double t = std::stod(r[1]);
    const std::string& kind = r[2];
    const int i = std::stoi(r[3]);
    const int j = std::stoi(r[4]);
    const Vec3 body(std::stod(r[5]), std::stod(r[6]), std::stod(r[7]));
    const Vec3 ref(std::stod(r[8]), std::stod(r[9]), std::stod(r[10]));
    MeasurementSet& ms = epoch_for(e, t);
    if (kind == "beacon") {
      ms.visible.push_back(i);
      ms.a_m.push_back(body);
      ms.p.push_back(ref);
    } else {
      MeasurementColumn::Kind k = kind == "pair"       ? MeasurementColumn::Kind::kPair
                                  : kind == "inertial" ? MeasurementColumn::Kind::kInertial
                                                       : MeasurementColumn::Kind::kCross;
      cols_by_epoch[e].push_back({{k, i, j}, body, ref});
    }
  }
  std::map<int, Vec3> prev_a;
  std::map<int, int> prev_epoch;
  double prev_t = 0.0;
  for (auto& ms : epochs) {
    const int j = static_cast<int>(ms.visible.size());
    if (j > 0) {
      Vec3 psum = Vec3::Zero(), asum = Vec3::Zero();
      for (int s = 0; s < j; ++s) {
        psum += ms.p[s];
        asum += ms.a_m[s];
      }
      ms.p_bar = psum / j;
      ms.a_bar_m = asum / j;
    }
    const auto& cols = cols_by_epoch[ms.epoch];
    ms.D.resize(3, static_cast<Eigen::Index>(cols.size()));
    ms.L_m.resize(3, static_cast<Eigen::Index>(cols.size()));
    ms.beta = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      ms.D.col(static_cast<Eigen::Index>(c)) = cols[c].ref;
      ms.L_m.col(static_cast<Eigen::Index>(c)) = cols[c].body;
      ms.columns.push_back(cols[c].meta);
      if (cols[c].meta.kind == MeasurementColumn::Kind::kInertial) ++ms.beta;
    }
    ms.v_m.assign(j, Vec3::Zero());
    ms.v_valid.assign(j, false);
    const double dt = ms.t - prev_t;
    for (int s = 0; s < j; ++s) {
      const int idx = ms.visible[s];
      const auto it = prev_epoch.find(idx);
      if (it != prev_epoch.end() && it->second == ms.epoch - 1 && dt > 0.0) {
        ms.v_m[s] = (ms.a_m[s] - prev_a[idx]) / dt;
        ms.v_valid[s] = true;
      }
    }
    for (int s = 0; s < j; ++s) {
      prev_a[ms.visible[s]] = ms.a_m[s];
      prev_epoch[ms.visible[s]] = ms.epoch;
    }
    prev_t = ms.t;
  }
  return epochs;
}

}  // namespace vpe
