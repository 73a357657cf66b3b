#include "vpe/harness.hpp"

#include "vpe/csv.hpp"
#include "vpe/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

namespace vpe {

namespace fs = std::filesystem;

ErrorMetrics error_metrics(const TruthState& truth, const Pose& g_hat, const Twist& xi_hat) {
  ErrorMetrics m;
  const Rotation q = truth.pose.rotation * g_hat.rotation.inverse();
  m.angle = principal_angle(q);
  m.pos_err = (truth.pose.translation - q * g_hat.translation).norm();
  const Vec6 phi = adjoint(g_hat) * (truth.twist.vec() - xi_hat.vec());
  m.omega_err = phi.head<3>();
  m.nu_err = phi.tail<3>();
  return m;
}

namespace {

StepRecord make_record(const TruthState& truth, const Pose& g_hat, const Twist& xi_hat,
                       const Vec6& phi, const EpochInputs& in, const GainSet& gains,
                       int newton_iters) {
  StepRecord r;
  r.t = truth.time;
  const ErrorMetrics m = error_metrics(truth, g_hat, xi_hat);
  r.ang_err = m.angle;
  r.pos_err = m.pos_err;
  r.omega_err = m.omega_err;
  r.nu_err = m.nu_err;
  EstimatorState es;
  es.g_hat = g_hat;
  es.phi = phi;
  es.xi_hat = xi_hat;
  r.lyapunov = lyapunov_value(es, truth, in, gains);
  r.n_beacons = in.n_beacons;
  r.newton_iters = newton_iters;
  return r;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  const VehicleParams params = cfg.vehicle();
  const World world = cfg.world();
  const CameraRig rig = cfg.rig();
  const GainSet gains = cfg.gain_set();
  const double dt = cfg.dt;

  const auto traj =
      simulate_truth(params, cfg.initial_truth(), dt, cfg.truth_horizon, cfg.wrench_frame);
  const auto n_est = static_cast<std::size_t>(std::llround(cfg.estimator_horizon / dt));

  SensorSimulator sensors(world, rig, cfg.noise(), cfg.velocity_mode, dt);
  TwistPipeline pipeline(cfg.pipeline_config(), dt);

  RunReport report;
  report.trace.reserve(n_est + 1);
  std::vector<MeasurementSet> log;
  if (cfg.write_measurements) log.reserve(n_est + 1);

  const Pose g_hat0 = cfg.initial_estimate_pose();
  const Twist xi_hat0 = cfg.initial_estimate_twist();

  MeasurementSet ms = sensors.step(traj[0]);
  if (cfg.write_measurements) log.push_back(ms);
  std::optional<Twist> xi_f = pipeline.step(ms);
  const Twist xi_m0 = xi_f.value_or(xi_hat0);

  EpochInputs in = make_epoch_inputs(ms, gains.weights, nullptr);
  in.xi_m = xi_m0;
  std::optional<Mat3> prev_K;
  if (in.has_attitude) prev_K = in.K;

  if (cfg.estimator_kind == EstimatorKind::kLgvi) {
    LgviFilter filter(gains, dt);
    LgviState st = filter.init(g_hat0, xi_hat0, xi_m0);
    report.trace.push_back(make_record(traj[0], st.g_hat, st.xi_hat, st.phi(), in, gains, 0));
    for (std::size_t i = 1; i <= n_est; ++i) {
      ms = sensors.step(traj[i]);
      if (cfg.write_measurements) log.push_back(ms);
      xi_f = pipeline.step(ms);
      in = make_epoch_inputs(ms, gains.weights, prev_K ? &*prev_K : nullptr);
      in.xi_m = xi_f.value_or(st.xi_hat);
      if (in.has_attitude) prev_K = in.K;
      LgviFilter::StepInfo info;
      try {
        st = filter.step(st, in, &info);
      } catch (const SolveFailure& e) {
        throw EstimatorFailure(static_cast<int>(i), e.what());
      }
      report.trace.push_back(
          make_record(traj[i], st.g_hat, st.xi_hat, st.phi(), in, gains, info.newton_iterations));
    }
  } else {
    EstimatorState st = make_initial_state(g_hat0, xi_hat0, xi_m0);
    report.trace.push_back(make_record(traj[0], st.g_hat, st.xi_hat, st.phi, in, gains, 0));
    EpochInputs held = in;  // measurements are held across the inter-epoch interval
    const double h = dt / cfg.substeps;
    for (std::size_t i = 1; i <= n_est; ++i) {
      for (int s = 0; s < cfg.substeps; ++s) st = integrate_step(st, held, gains, h);
      ms = sensors.step(traj[i]);
      if (cfg.write_measurements) log.push_back(ms);
      xi_f = pipeline.step(ms);
      in = make_epoch_inputs(ms, gains.weights, prev_K ? &*prev_K : nullptr);
      in.xi_m = xi_f.value_or(st.xi_hat);
      if (in.has_attitude) prev_K = in.K;
      st.xi_hat = Twist::from_vec(in.xi_m.vec() - adjoint(st.g_hat.inverse()) * st.phi);
      report.trace.push_back(make_record(traj[i], st.g_hat, st.xi_hat, st.phi, in, gains, 0));
      held = in;
    }
  }

  report.summary = summarize(report.trace);

  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    write_trace_csv((fs::path(cfg.output_dir) / "trace.csv").string(), report.trace);
    write_summary_json((fs::path(cfg.output_dir) / "summary.json").string(), report.summary);
    std::ofstream cfg_out(fs::path(cfg.output_dir) / "config.json");
    cfg_out << cfg.to_json().dump(2) << "\n";
    std::ofstream plot(fs::path(cfg.output_dir) / "plot.gp");
    plot << "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set logscale y\n"
            "set xlabel 't [s]'\n"
            "plot 'trace.csv' using 1:2 with lines title 'angle error [rad]', \\\n"
            "     'trace.csv' using 1:3 with lines title 'position error [m]'\n"
            "pause -1\n";
    if (cfg.write_truth) {
      write_trajectory_csv((fs::path(cfg.output_dir) / "truth.csv").string(), traj);
    }
    if (cfg.write_measurements) {
      write_measurement_log((fs::path(cfg.output_dir) / "measurements.csv").string(), log);
    }
  }
  return report;
}

RunSummary summarize(const std::vector<StepRecord>& trace) {
  RunSummary s;
  if (trace.empty()) return s;
  s.initial_ang_err = trace.front().ang_err;
  s.initial_pos_err = trace.front().pos_err;
  s.final_ang_err = trace.back().ang_err;
  s.final_pos_err = trace.back().pos_err;

  const std::size_t start = trace.size() - std::max<std::size_t>(1, trace.size() / 4);
  double asum = 0.0, amax = 0.0, psum = 0.0, pmax = 0.0;
  for (std::size_t i = start; i < trace.size(); ++i) {
    asum += trace[i].ang_err;
    amax = std::max(amax, trace[i].ang_err);
    psum += trace[i].pos_err;
    pmax = std::max(pmax, trace[i].pos_err);
  }
  const double count = static_cast<double>(trace.size() - start);
  s.steady_ang_mean = asum / count;
  s.steady_ang_max = amax;
  s.steady_pos_mean = psum / count;
  s.steady_pos_max = pmax;

  auto settling = [&](auto get, double threshold) {
    // Earliest time from which the signal stays below the threshold.
    double t = -1.0;
    for (std::size_t i = trace.size(); i-- > 0;) {
      if (get(trace[i]) >= threshold) break;
      t = trace[i].t;
    }
    return t;
  };
  auto ang = [](const StepRecord& r) { return r.ang_err; };
  auto pos = [](const StepRecord& r) { return r.pos_err; };
  s.settling_ang_1e2 = settling(ang, 1e-2);
  s.settling_ang_1e3 = settling(ang, 1e-3);
  s.settling_pos_1e2 = settling(pos, 1e-2);
  s.settling_pos_1e3 = settling(pos, 1e-3);

  s.min_beacons = trace.front().n_beacons;
  s.max_beacons = trace.front().n_beacons;
  for (const auto& r : trace) {
    s.min_beacons = std::min(s.min_beacons, r.n_beacons);
    s.max_beacons = std::max(s.max_beacons, r.n_beacons);
  }
  return s;
}

void write_trace_csv(const std::string& path, const std::vector<StepRecord>& trace) {
  CsvWriter csv(path);
  csv.header({"t", "ang_err", "pos_err", "wx", "wy", "wz", "vx", "vy", "vz", "V", "n_beacons",
              "newton_iters"});
  for (const auto& r : trace) {
    csv.begin_row();
    csv.field(r.t);
    csv.field(r.ang_err);
    csv.field(r.pos_err);
    for (int i = 0; i < 3; ++i) csv.field(r.omega_err(i));
    for (int i = 0; i < 3; ++i) csv.field(r.nu_err(i));
    csv.field(r.lyapunov);
    csv.field(r.n_beacons);
    csv.field(r.newton_iters);
    csv.end_row();
  }
}

void write_summary_json(const std::string& path, const RunSummary& s) {
  nlohmann::json j;
  j["initial"] = {{"ang_err", s.initial_ang_err}, {"pos_err", s.initial_pos_err}};
  j["final"] = {{"ang_err", s.final_ang_err}, {"pos_err", s.final_pos_err}};
  j["steady_state_last_quarter"] = {{"ang_mean", s.steady_ang_mean},
                                    {"ang_max", s.steady_ang_max},
                                    {"pos_mean", s.steady_pos_mean},
                                    {"pos_max", s.steady_pos_max}};
  j["settling_time_s"] = {{"ang_below_1e-2", s.settling_ang_1e2},
                          {"ang_below_1e-3", s.settling_ang_1e3},
                          {"pos_below_1e-2", s.settling_pos_1e2},
                          {"pos_below_1e-3", s.settling_pos_1e3}};
  j["beacons"] = {{"min", s.min_beacons}, {"max", s.max_beacons}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

SweepReport sweep(const ExperimentConfig& base, const std::vector<SweepVariable>& vars,
                  const std::string& out_dir, int jobs) {
  SweepReport report;
  std::size_t total = 1;
  for (const auto& v : vars) total *= std::max<std::size_t>(1, v.values.size());

  for (std::size_t cell = 0; cell < total; ++cell) {
    SweepCell c;
    c.index = static_cast<int>(cell);
    std::size_t rem = cell;
    for (const auto& v : vars) {
      const std::size_t k = rem % v.values.size();
      rem /= v.values.size();
      c.assignment.emplace_back(v.field, v.values[k]);
    }
    report.cells.push_back(std::move(c));
  }

  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(report.cells.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= report.cells.size()) return;
      SweepCell& c = report.cells[i];
      try {
        ExperimentConfig cfg = base;
        for (const auto& [field, value] : c.assignment) cfg.apply_override(field, value);
        if (!out_dir.empty()) {
          cfg.output_dir = (fs::path(out_dir) / ("cell_" + std::to_string(c.index))).string();
        }
        c.summary = run_experiment(cfg).summary;
        c.ok = true;
      } catch (const std::exception& e) {
        c.ok = false;
        c.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    CsvWriter csv((fs::path(out_dir) / "sweep_summary.csv").string());
    csv.header({"cell", "assignment", "ok", "error", "final_ang_err", "final_pos_err",
                "steady_ang_mean", "steady_pos_mean", "min_beacons"});
    for (const auto& c : report.cells) {
      std::string assign;
      for (const auto& [field, value] : c.assignment) {
        if (!assign.empty()) assign += ';';
        assign += field + "=" + value.dump();
      }
      std::string err = c.error;
      std::replace(err.begin(), err.end(), ',', ';');
      csv.begin_row();
      csv.field(c.index);
      csv.field(assign);
      csv.field(std::string(c.ok ? "1" : "0"));
      csv.field(err);
      csv.field(c.summary.final_ang_err);
      csv.field(c.summary.final_pos_err);
      csv.field(c.summary.steady_ang_mean);
      csv.field(c.summary.steady_pos_mean);
      csv.field(c.summary.min_beacons);
      csv.end_row();
    }
  }
  return report;
}

}  // namespace vpe
