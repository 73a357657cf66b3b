#include "vpe/config.hpp"
#include "vpe/estimator_discrete.hpp"
#include "vpe/geometry.hpp"
#include "vpe/sensors.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_ExpSe3(benchmark::State& state) {
  const vpe::Twist xi{vpe::Vec3(0.2, -0.05, 0.1), vpe::Vec3(-0.05, 0.15, 0.03)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(vpe::exp_se3(xi, 0.02));
  }
}
BENCHMARK(BM_ExpSe3);

void BM_SolveF(benchmark::State& state) {
  const vpe::Mat3 J = vpe::Vec3(0.9, 0.6, 0.3).asDiagonal();
  const vpe::Vec3 omega(0.2, -0.05, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vpe::solve_F(J, omega, 0.02));
  }
}
BENCHMARK(BM_SolveF);

void BM_MeasureEpoch(benchmark::State& state) {
  const auto cfg = vpe::ExperimentConfig::case1();
  const auto world = cfg.world();
  const auto rig = cfg.rig();
  const auto noise = cfg.noise();
  const auto truth = cfg.initial_truth();
  int epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vpe::measure_epoch(truth, world, rig, noise, epoch++));
  }
}
BENCHMARK(BM_MeasureEpoch);

void BM_LgviStep(benchmark::State& state) {
  const auto cfg = vpe::ExperimentConfig::case1();
  const auto gains = cfg.gain_set();
  const auto truth = cfg.initial_truth();
  const auto ms = vpe::measure_epoch(truth, cfg.world(), cfg.rig(), cfg.noise(), 0);
  auto in = vpe::make_epoch_inputs(ms, gains.weights);
  in.xi_m = truth.twist;
  const vpe::LgviFilter filter(gains, cfg.dt);
  const auto s0 = filter.init(cfg.initial_estimate_pose(), cfg.initial_estimate_twist(),
                              truth.twist);
  for (auto _ : state) {
    benchmark::DoNotOptimize(filter.step(s0, in));
  }
}
BENCHMARK(BM_LgviStep);

}  // namespace

BENCHMARK_MAIN();
