#pragma once

#include "vpe/config.hpp"
#include "vpe/estimator_discrete.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace vpe {

/// Thrown when a run aborts inside the estimator (rotation solve failure).
class EstimatorFailure : public std::runtime_error {
 public:
  EstimatorFailure(int step, const std::string& what)
      : std::runtime_error(what), step_index(step) {}
  int step_index;
};

struct ErrorMetrics {
  double angle{0.0};    // principal angle of R R_hat^T, rad
  double pos_err{0.0};  // |b - Q b_hat|, m
  Vec3 omega_err{Vec3::Zero()};  // rad/s
  Vec3 nu_err{Vec3::Zero()};     // m/s
};

/// Estimation errors against the truth: attitude error Q = R R_hat^T,
/// position error x = b - Q b_hat, and the velocity error blocks of
/// Ad(g_hat) (xi - xi_hat).
ErrorMetrics error_metrics(const TruthState& truth, const Pose& g_hat, const Twist& xi_hat);

struct StepRecord {
  double t{0.0};
  double ang_err{0.0};
  double pos_err{0.0};
  Vec3 omega_err{Vec3::Zero()};
  Vec3 nu_err{Vec3::Zero()};
  double lyapunov{0.0};
  int n_beacons{0};
  int newton_iters{0};
};

struct RunSummary {
  double initial_ang_err{0.0}, initial_pos_err{0.0};
  double final_ang_err{0.0}, final_pos_err{0.0};
  double steady_ang_mean{0.0}, steady_ang_max{0.0};  // over the final 25%
  double steady_pos_mean{0.0}, steady_pos_max{0.0};
  double settling_ang_1e2{-1.0}, settling_ang_1e3{-1.0};  // s; -1 = never settled
  double settling_pos_1e2{-1.0}, settling_pos_1e3{-1.0};
  int min_beacons{0}, max_beacons{0};
};

struct RunReport {
  std::vector<StepRecord> trace;
  RunSummary summary;
};

/// One full experiment: truth simulation, sensor synthesis, velocity
/// pipeline, estimator, metrics. Deterministic given the config (including
/// its seed). Writes trace.csv / summary.json (plus optional truth and
/// measurement logs) when output.dir is set.
RunReport run_experiment(const ExperimentConfig& cfg);

RunSummary summarize(const std::vector<StepRecord>& trace);

/// Trace CSV, fixed column order:
/// t,ang_err,pos_err,wx,wy,wz,vx,vy,vz,V,n_beacons,newton_iters
void write_trace_csv(const std::string& path, const std::vector<StepRecord>& trace);
void write_summary_json(const std::string& path, const RunSummary& summary);

struct SweepVariable {
  std::string field;
  std::vector<nlohmann::json> values;
};

struct SweepCell {
  int index{0};
  std::vector<std::pair<std::string, nlohmann::json>> assignment;
  bool ok{false};
  std::string error;
  RunSummary summary;
};

struct SweepReport {
  std::vector<SweepCell> cells;
};

/// Cartesian product over the sweep variables; cells run concurrently on up
/// to `jobs` threads, each with isolated state. Failing cells record their
/// error and the sweep continues. Per-cell outputs land in
/// out_dir/cell_<k>/ when out_dir is set; a sweep_summary.csv indexes them.
SweepReport sweep(const ExperimentConfig& base, const std::vector<SweepVariable>& vars,
                  const std::string& out_dir, int jobs = 0);

}  // namespace vpe
