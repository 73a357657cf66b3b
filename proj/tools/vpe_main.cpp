// Command line front end: `vpe run` executes one experiment, `vpe sweep`
// a parameter grid. Exit codes: 0 success, 2 configuration error,
// 3 estimator failure.

#include "vpe/config.hpp"
#include "vpe/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset{"case1"};
  std::string out_dir;
  bool have_seed{false};
  std::uint64_t seed{0};
  bool have_noise{false};
  double noise_width{0.0};
  std::string velocity_source;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Experiment config file (JSON)");
  cmd->add_option("--preset", o.preset, "Base preset: case1 or case2")
      ->check(CLI::IsMember({"case1", "case2"}));
  cmd->add_option("--out", o.out_dir, "Output directory (trace.csv, summary.json, ...)");
  cmd->add_option("--seed", o.seed, "Noise seed")->each([&](const std::string&) {
    o.have_seed = true;
  });
  cmd->add_option("--noise-width", o.noise_width,
                  "Bump width for beacon and direction noise (m)")
      ->each([&](const std::string&) { o.have_noise = true; });
  cmd->add_option("--velocity-source", o.velocity_source, "direct|gyro|optical")
      ->check(CLI::IsMember({"direct", "gyro", "optical"}));
}

vpe::ExperimentConfig build_config(const CommonOpts& o) {
  vpe::ExperimentConfig cfg = vpe::ExperimentConfig::preset(o.preset);
  if (!o.config_path.empty()) cfg = vpe::ExperimentConfig::load(o.config_path, cfg);
  if (o.have_seed) cfg.seed = o.seed;
  if (o.have_noise) {
    cfg.beacon_noise_width = o.noise_width;
    cfg.direction_noise_width = o.noise_width;
  }
  if (!o.velocity_source.empty()) {
    cfg.velocity_source = o.velocity_source == "direct" ? vpe::VelocitySource::kDirect
                          : o.velocity_source == "gyro" ? vpe::VelocitySource::kGyroAided
                                                        : vpe::VelocitySource::kOpticalOnly;
  }
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  cfg.validate();
  return cfg;
}

std::vector<vpe::SweepVariable> parse_vary(const std::vector<std::string>& specs) {
  std::vector<vpe::SweepVariable> vars;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
      throw vpe::ConfigError("--vary: expected FIELD=v1,v2,... got '" + spec + "'");
    }
    vpe::SweepVariable var;
    var.field = spec.substr(0, eq);
    std::string rest = spec.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const std::string tok =
          rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (tok.empty()) throw vpe::ConfigError("--vary: empty value in '" + spec + "'");
      try {
        var.values.push_back(nlohmann::json::parse(tok));
      } catch (const nlohmann::json::parse_error&) {
        var.values.push_back(nlohmann::json(tok));  // bare string value
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (var.values.empty()) throw vpe::ConfigError("--vary: no values in '" + spec + "'");
    vars.push_back(std::move(var));
  }
  return vars;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid-body pose and velocity estimator testbench"};
  app.require_subcommand(0, 1);

  bool print_default = false;
  app.add_flag("--print-default-config", print_default,
               "Print the case1 preset config as JSON and exit");

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  add_common(run, run_opts);

  CommonOpts sweep_opts;
  std::vector<std::string> vary_specs;
  int jobs = 0;
  CLI::App* sw = app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(sw, sweep_opts);
  sw->add_option("--vary", vary_specs, "FIELD=v1,v2,... (repeatable; cartesian product)")
      ->required();
  sw->add_option("--jobs", jobs, "Concurrent cells (default: hardware threads)");

  CLI11_PARSE(app, argc, argv);

  if (print_default) {
    std::cout << vpe::ExperimentConfig::case1().to_json().dump(2) << "\n";
    return 0;
  }

  try {
    if (run->parsed()) {
      const vpe::ExperimentConfig cfg = build_config(run_opts);
      const vpe::RunReport report = vpe::run_experiment(cfg);
      const auto& s = report.summary;
      std::printf("steps: %zu\n", report.trace.size());
      std::printf("final errors: angle %.6g rad, position %.6g m\n", s.final_ang_err,
                  s.final_pos_err);
      std::printf("steady state (last quarter): angle mean %.6g rad, position mean %.6g m\n",
                  s.steady_ang_mean, s.steady_pos_mean);
      std::printf("beacons visible: min %d, max %d\n", s.min_beacons, s.max_beacons);
      if (!cfg.output_dir.empty()) std::printf("outputs written to %s\n", cfg.output_dir.c_str());
      return 0;
    }
    if (sw->parsed()) {
      const vpe::ExperimentConfig cfg = build_config(sweep_opts);
      const auto vars = parse_vary(vary_specs);
      const vpe::SweepReport report = vpe::sweep(cfg, vars, sweep_opts.out_dir, jobs);
      int failures = 0;
      for (const auto& c : report.cells) {
        std::string assign;
        for (const auto& [field, value] : c.assignment) {
          if (!assign.empty()) assign += ' ';
          assign += field + "=" + value.dump();
        }
        if (c.ok) {
          std::printf("cell %d [%s]: final angle %.6g rad, position %.6g m\n", c.index,
                      assign.c_str(), c.summary.final_ang_err, c.summary.final_pos_err);
        } else {
          ++failures;
          std::printf("cell %d [%s]: FAILED: %s\n", c.index, assign.c_str(), c.error.c_str());
        }
      }
      std::printf("%zu cells, %d failed\n", report.cells.size(), failures);
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const vpe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vpe::EstimatorFailure& e) {
    std::cerr << "estimator failure at step " << e.step_index << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
