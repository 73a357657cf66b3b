#include "vpe/config.hpp"

#include "vpe/geometry.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace vpe {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

std::string join(const std::string& a, const std::string& b) {
  return a.empty() ? b : a + "." + b;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& known) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) fail(join(path, key), "unknown field");
  }
}

double get_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string get_str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec3 get_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) fail(path, "expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v(i) = get_num(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  if (name == "case1") return case1();
  if (name == "case2") return case2();
  throw ConfigError("preset: unknown preset '" + name + "' (expected case1 or case2)");
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  if (!j.is_object()) fail("<root>", "expected a JSON object");
  check_keys(j, "",
             {"dt", "truth_horizon", "estimator_horizon", "seed", "velocity_source", "estimator",
              "vehicle", "initial_truth", "initial_estimate", "gains", "cameras", "world", "noise",
              "velocity_mode", "filter", "output"});

  if (j.contains("dt")) c.dt = get_num(j["dt"], "dt");
  if (j.contains("truth_horizon")) c.truth_horizon = get_num(j["truth_horizon"], "truth_horizon");
  if (j.contains("estimator_horizon"))
    c.estimator_horizon = get_num(j["estimator_horizon"], "estimator_horizon");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() &&
        !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      fail("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("velocity_source")) {
    const std::string s = get_str(j["velocity_source"], "velocity_source");
    if (s == "direct")
      c.velocity_source = VelocitySource::kDirect;
    else if (s == "gyro")
      c.velocity_source = VelocitySource::kGyroAided;
    else if (s == "optical")
      c.velocity_source = VelocitySource::kOpticalOnly;
    else
      fail("velocity_source", "expected direct|gyro|optical");
  }
  if (j.contains("estimator")) {
    const json& e = j["estimator"];
    check_keys(e, "estimator", {"kind", "substeps"});
    if (e.contains("kind")) {
      const std::string s = get_str(e["kind"], "estimator.kind");
      if (s == "lgvi")
        c.estimator_kind = EstimatorKind::kLgvi;
      else if (s == "continuous")
        c.estimator_kind = EstimatorKind::kContinuous;
      else
        fail("estimator.kind", "expected lgvi|continuous");
    }
    if (e.contains("substeps")) c.substeps = static_cast<int>(get_num(e["substeps"], "estimator.substeps"));
  }
  if (j.contains("vehicle")) {
    const json& v = j["vehicle"];
    check_keys(v, "vehicle", {"mass_grams", "inertia_grams_m2", "wrench_frame"});
    if (v.contains("mass_grams")) c.mass_grams = get_num(v["mass_grams"], "vehicle.mass_grams");
    if (v.contains("inertia_grams_m2"))
      c.inertia_grams_m2 = get_vec3(v["inertia_grams_m2"], "vehicle.inertia_grams_m2");
    if (v.contains("wrench_frame")) {
      const std::string s = get_str(v["wrench_frame"], "vehicle.wrench_frame");
      if (s == "body")
        c.wrench_frame = WrenchFrame::kBody;
      else if (s == "inertial")
        c.wrench_frame = WrenchFrame::kInertial;
      else
        fail("vehicle.wrench_frame", "expected body|inertial");
    }
  }
  auto read_state = [&](const json& s, const std::string& path, Vec3& axis, double& angle,
                        Vec3& pos, Vec3& omega, Vec3& nu) {
    check_keys(s, path, {"attitude_axis", "attitude_angle", "position", "omega", "nu"});
    if (s.contains("attitude_axis")) axis = get_vec3(s["attitude_axis"], path + ".attitude_axis");
    if (s.contains("attitude_angle")) angle = get_num(s["attitude_angle"], path + ".attitude_angle");
    if (s.contains("position")) pos = get_vec3(s["position"], path + ".position");
    if (s.contains("omega")) omega = get_vec3(s["omega"], path + ".omega");
    if (s.contains("nu")) nu = get_vec3(s["nu"], path + ".nu");
  };
  if (j.contains("initial_truth"))
    read_state(j["initial_truth"], "initial_truth", c.truth_attitude_axis, c.truth_attitude_angle,
               c.truth_position, c.truth_omega, c.truth_nu);
  if (j.contains("initial_estimate"))
    read_state(j["initial_estimate"], "initial_estimate", c.est_attitude_axis,
               c.est_attitude_angle, c.est_position, c.est_omega, c.est_nu);
  if (j.contains("gains")) {
    const json& g = j["gains"];
    check_keys(g, "gains", {"J", "M", "D_r", "D_t", "kappa", "varsigma", "tail_weight"});
    if (g.contains("J")) c.gain_J = get_vec3(g["J"], "gains.J");
    if (g.contains("M")) c.gain_M = get_vec3(g["M"], "gains.M");
    if (g.contains("D_r")) c.gain_D_r = get_vec3(g["D_r"], "gains.D_r");
    if (g.contains("D_t")) c.gain_D_t = get_vec3(g["D_t"], "gains.D_t");
    if (g.contains("kappa")) c.kappa = get_num(g["kappa"], "gains.kappa");
    if (g.contains("varsigma")) c.varsigma = get_vec3(g["varsigma"], "gains.varsigma");
    if (g.contains("tail_weight")) c.tail_weight = get_num(g["tail_weight"], "gains.tail_weight");
  }
  if (j.contains("cameras")) {
    const json& cam = j["cameras"];
    check_keys(cam, "cameras", {"count", "half_angle_deg", "azimuth_offset_deg"});
    if (cam.contains("count")) c.camera_count = static_cast<int>(get_num(cam["count"], "cameras.count"));
    if (cam.contains("half_angle_deg"))
      c.camera_half_angle_deg = get_num(cam["half_angle_deg"], "cameras.half_angle_deg");
    if (cam.contains("azimuth_offset_deg"))
      c.camera_azimuth_offset_deg = get_num(cam["azimuth_offset_deg"], "cameras.azimuth_offset_deg");
  }
  if (j.contains("world")) {
    const json& w = j["world"];
    check_keys(w, "world", {"room_half_extent", "inertial_directions"});
    if (w.contains("room_half_extent"))
      c.room_half_extent = get_num(w["room_half_extent"], "world.room_half_extent");
    if (w.contains("inertial_directions")) {
      const json& dirs = w["inertial_directions"];
      if (!dirs.is_array()) fail("world.inertial_directions", "expected an array of 3-vectors");
      c.inertial_directions.clear();
      for (std::size_t i = 0; i < dirs.size(); ++i) {
        c.inertial_directions.push_back(
            get_vec3(dirs[i], "world.inertial_directions[" + std::to_string(i) + "]"));
      }
    }
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, "noise", {"beacon_width", "direction_width", "velocity_width", "twist_width"});
    if (n.contains("beacon_width")) c.beacon_noise_width = get_num(n["beacon_width"], "noise.beacon_width");
    if (n.contains("direction_width"))
      c.direction_noise_width = get_num(n["direction_width"], "noise.direction_width");
    if (n.contains("velocity_width"))
      c.velocity_noise_width = get_num(n["velocity_width"], "noise.velocity_width");
    if (n.contains("twist_width")) c.twist_noise_width = get_num(n["twist_width"], "noise.twist_width");
  }
  if (j.contains("velocity_mode")) {
    const std::string s = get_str(j["velocity_mode"], "velocity_mode");
    if (s == "fd")
      c.velocity_mode = PointVelocityMode::kFiniteDifference;
    else if (s == "exact")
      c.velocity_mode = PointVelocityMode::kExactPlusNoise;
    else
      fail("velocity_mode", "expected fd|exact");
  }
  if (j.contains("filter")) {
    const json& f = j["filter"];
    check_keys(f, "filter", {"omega_n", "mu", "filter_direct_twist"});
    if (f.contains("omega_n")) c.filter_omega_n = get_num(f["omega_n"], "filter.omega_n");
    if (f.contains("mu")) c.filter_mu = get_num(f["mu"], "filter.mu");
    if (f.contains("filter_direct_twist"))
      c.filter_direct_twist = get_bool(f["filter_direct_twist"], "filter.filter_direct_twist");
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"dir", "write_truth", "write_measurements"});
    if (o.contains("dir")) c.output_dir = get_str(o["dir"], "output.dir");
    if (o.contains("write_truth")) c.write_truth = get_bool(o["write_truth"], "output.write_truth");
    if (o.contains("write_measurements"))
      c.write_measurements = get_bool(o["write_measurements"], "output.write_measurements");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  return from_json(j, base);
}

json ExperimentConfig::to_json() const {
  json j;
  j["dt"] = dt;
  j["truth_horizon"] = truth_horizon;
  j["estimator_horizon"] = estimator_horizon;
  j["seed"] = seed;
  j["velocity_source"] = velocity_source == VelocitySource::kDirect      ? "direct"
                         : velocity_source == VelocitySource::kGyroAided ? "gyro"
                                                                         : "optical";
  j["estimator"] = {{"kind", estimator_kind == EstimatorKind::kLgvi ? "lgvi" : "continuous"},
                    {"substeps", substeps}};
  j["vehicle"] = {{"mass_grams", mass_grams},
                  {"inertia_grams_m2", vec3_json(inertia_grams_m2)},
                  {"wrench_frame", wrench_frame == WrenchFrame::kBody ? "body" : "inertial"}};
  j["initial_truth"] = {{"attitude_axis", vec3_json(truth_attitude_axis)},
                        {"attitude_angle", truth_attitude_angle},
                        {"position", vec3_json(truth_position)},
                        {"omega", vec3_json(truth_omega)},
                        {"nu", vec3_json(truth_nu)}};
  j["initial_estimate"] = {{"attitude_axis", vec3_json(est_attitude_axis)},
                           {"attitude_angle", est_attitude_angle},
                           {"position", vec3_json(est_position)},
                           {"omega", vec3_json(est_omega)},
                           {"nu", vec3_json(est_nu)}};
  j["gains"] = {{"J", vec3_json(gain_J)},     {"M", vec3_json(gain_M)},
                {"D_r", vec3_json(gain_D_r)}, {"D_t", vec3_json(gain_D_t)},
                {"kappa", kappa},             {"varsigma", vec3_json(varsigma)},
                {"tail_weight", tail_weight}};
  j["cameras"] = {{"count", camera_count},
                  {"half_angle_deg", camera_half_angle_deg},
                  {"azimuth_offset_deg", camera_azimuth_offset_deg}};
  json dirs = json::array();
  for (const auto& d : inertial_directions) dirs.push_back(vec3_json(d));
  j["world"] = {{"room_half_extent", room_half_extent}, {"inertial_directions", dirs}};
  j["noise"] = {{"beacon_width", beacon_noise_width},
                {"direction_width", direction_noise_width},
                {"velocity_width", velocity_noise_width},
                {"twist_width", twist_noise_width}};
  j["velocity_mode"] = velocity_mode == PointVelocityMode::kFiniteDifference ? "fd" : "exact";
  j["filter"] = {{"omega_n", filter_omega_n},
                 {"mu", filter_mu},
                 {"filter_direct_twist", filter_direct_twist}};
  j["output"] = {{"dir", output_dir},
                 {"write_truth", write_truth},
                 {"write_measurements", write_measurements}};
  return j;
}

void ExperimentConfig::apply_override(const std::string& field, const json& value) {
  json j = to_json();
  json* node = &j;
  std::string rest = field;
  std::string walked;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string key = rest.substr(0, dot);
    walked = join(walked, key);
    if (!node->is_object() || !node->contains(key)) fail(walked, "unknown field");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    rest = rest.substr(dot + 1);
  }
  *node = value;
  *this = from_json(j, *this);
}

void ExperimentConfig::validate() const {
  if (dt <= 0.0) fail("dt", "must be positive");
  if (truth_horizon <= 0.0) fail("truth_horizon", "must be positive");
  if (estimator_horizon <= 0.0) fail("estimator_horizon", "must be positive");
  if (estimator_horizon > truth_horizon + 1e-12)
    fail("estimator_horizon", "must not exceed truth_horizon");
  if (substeps < 1) fail("estimator.substeps", "must be >= 1");
  if (mass_grams <= 0.0) fail("vehicle.mass_grams", "must be positive");
  for (int i = 0; i < 3; ++i)
    if (inertia_grams_m2(i) <= 0.0) fail("vehicle.inertia_grams_m2", "entries must be positive");
  if (std::abs(truth_attitude_axis.norm() - 1.0) > 1e-6)
    fail("initial_truth.attitude_axis", "must be a unit vector");
  if (est_attitude_angle != 0.0 && std::abs(est_attitude_axis.norm() - 1.0) > 1e-6)
    fail("initial_estimate.attitude_axis", "must be a unit vector");
  auto check_pd = [&](const Vec3& v, const std::string& p) {
    for (int i = 0; i < 3; ++i)
      if (v(i) <= 0.0) fail(p, "diagonal entries must be positive");
  };
  check_pd(gain_J, "gains.J");
  check_pd(gain_M, "gains.M");
  check_pd(gain_D_r, "gains.D_r");
  check_pd(gain_D_t, "gains.D_t");
  if (kappa <= 0.0) fail("gains.kappa", "must be positive");
  if (!(varsigma.x() > varsigma.y() && varsigma.y() > varsigma.z() && varsigma.z() > 0.0))
    fail("gains.varsigma", "must be strictly decreasing and positive");
  if (tail_weight <= 0.0) fail("gains.tail_weight", "must be positive");
  if (camera_count < 1) fail("cameras.count", "must be >= 1");
  if (camera_half_angle_deg <= 0.0 || camera_half_angle_deg >= 90.0)
    fail("cameras.half_angle_deg", "must lie in (0, 90)");
  if (room_half_extent <= 0.0) fail("world.room_half_extent", "must be positive");
  for (std::size_t i = 0; i < inertial_directions.size(); ++i) {
    if (inertial_directions[i].norm() < 1e-12)
      fail("world.inertial_directions[" + std::to_string(i) + "]", "must be nonzero");
  }
  if (beacon_noise_width < 0.0) fail("noise.beacon_width", "must be non-negative");
  if (direction_noise_width < 0.0) fail("noise.direction_width", "must be non-negative");
  if (velocity_noise_width < 0.0) fail("noise.velocity_width", "must be non-negative");
  if (twist_noise_width < 0.0) fail("noise.twist_width", "must be non-negative");
  if (filter_omega_n <= 0.0) fail("filter.omega_n", "must be positive");
  if (filter_mu <= 0.0) fail("filter.mu", "must be positive");
}

VehicleParams ExperimentConfig::vehicle() const {
  return VehicleParams::from_grams(mass_grams, inertia_grams_m2);
}

World ExperimentConfig::world() const {
  return World::cube_room(room_half_extent, inertial_directions);
}

CameraRig ExperimentConfig::rig() const {
  return CameraRig::horizontal_ring(camera_count, camera_half_angle_deg * M_PI / 180.0,
                                    camera_azimuth_offset_deg * M_PI / 180.0);
}

NoiseModel ExperimentConfig::noise() const {
  NoiseModel n;
  n.beacon_width = beacon_noise_width;
  n.direction_width = direction_noise_width;
  n.velocity_width = velocity_noise_width;
  n.twist_width = twist_noise_width;
  n.seed = seed;
  return n;
}

GainSet ExperimentConfig::gain_set() const {
  GainSet g;
  g.J = gain_J.asDiagonal();
  g.M = gain_M.asDiagonal();
  g.D_r = gain_D_r.asDiagonal();
  g.D_t = gain_D_t.asDiagonal();
  g.kappa = kappa;
  g.weights.varsigma = varsigma;
  g.weights.tail_weight = tail_weight;
  return g;
}

TruthState ExperimentConfig::initial_truth() const {
  TruthState s;
  s.pose.rotation = exp_so3(truth_attitude_angle * truth_attitude_axis);
  s.pose.translation = truth_position;
  s.twist = Twist{truth_omega, truth_nu};
  s.time = 0.0;
  return s;
}

Pose ExperimentConfig::initial_estimate_pose() const {
  Pose g;
  g.rotation = exp_so3(est_attitude_angle * est_attitude_axis);
  g.translation = est_position;
  return g;
}

Twist ExperimentConfig::initial_estimate_twist() const { return Twist{est_omega, est_nu}; }

TwistPipelineConfig ExperimentConfig::pipeline_config() const {
  TwistPipelineConfig p;
  p.source = velocity_source;
  p.filter.omega_n = filter_omega_n;
  p.filter.mu = filter_mu;
  p.filter_direct_twist = filter_direct_twist;
  return p;
}

}  // namespace vpe
