// Copyright 2026 The dkr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Exit codes: 0 success, 1 partial failures,
// 2 configuration/usage errors.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dkr/sweep.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

/// Worker count: DKR_WORKERS wins, otherwise available parallelism.
unsigned worker_count() {
  if (const char* env = std::getenv("DKR_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid DKR_WORKERS=" << env << "\n";
  }
  return 0;  // run_sweep resolves 0 to hardware concurrency
}

int do_sweep(const dkr::SweepConfig& cfg, bool force) {
  const dkr::SweepOutcome out = dkr::run_sweep(cfg, worker_count(), force);
  std::cout << "points: " << out.points_total << "  run: " << out.tasks_run
            << "  skipped: " << out.tasks_skipped
            << "  failed: " << out.tasks_failed << "\n";
  return out.tasks_failed > 0 ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dissipative kicked rotator sweeps"};
  app.require_subcommand(1);

  // sweep run <config> / sweep resume <store>
  auto* sweep = app.add_subcommand("sweep", "run or resume a parameter sweep");
  sweep->require_subcommand(1);
  std::string config_path;
  bool force = false;
  auto* sweep_run = sweep->add_subcommand("run", "run a sweep from a config");
  sweep_run->add_option("config", config_path, "sweep config file")->required();
  sweep_run->add_flag("--force", force, "recompute completed entries");
  std::string store_path;
  auto* sweep_resume =
      sweep->add_subcommand("resume", "resume a sweep from its store");
  sweep_resume->add_option("store", store_path, "sweep store directory")
      ->required();

  // point run --k --gamma [--tasks]
  auto* point = app.add_subcommand("point", "single-point pipeline");
  point->require_subcommand(1);
  auto* point_run = point->add_subcommand("run", "run one (k, gamma) point");
  double k = 0.0, gamma = 0.0;
  std::string tasks_str = "currents,spectra,equilibrium";
  std::string point_config;
  point_run->add_option("--k", k, "kick strength")->required();
  point_run->add_option("--gamma", gamma, "dissipation parameter")->required();
  point_run->add_option("--tasks", tasks_str,
                        "comma list of currents,spectra,equilibrium");
  point_run->add_option("--config", point_config,
                        "optional config for pipeline settings");

  // emit <store> --figure figN
  auto* emit = app.add_subcommand("emit", "emit plot-ready data tables");
  std::string emit_store, figure;
  emit->add_option("store", emit_store, "sweep store directory")->required();
  emit->add_option("--figure", figure, "fig1..fig5")->required();

  // validate config <file>
  auto* validate = app.add_subcommand("validate", "validate inputs");
  std::string validate_path;
  auto* validate_config =
      validate->add_subcommand("config", "validate a sweep config file");
  validate_config->add_option("file", validate_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (sweep_run->parsed()) {
      return do_sweep(dkr::SweepConfig::load(config_path), force);
    }
    if (sweep_resume->parsed()) {
      const dkr::fs::path cfg_file = dkr::fs::path(store_path) / "config.cfg";
      if (!dkr::fs::exists(cfg_file)) {
        std::cerr << "error: no config.cfg in store " << store_path << "\n";
        return kConfigError;
      }
      dkr::SweepConfig cfg = dkr::SweepConfig::load(cfg_file.string());
      cfg.output_dir = store_path;
      return do_sweep(cfg, false);
    }
    if (point_run->parsed()) {
      dkr::SweepConfig cfg;
      if (!point_config.empty()) cfg = dkr::SweepConfig::load(point_config);
      const unsigned tasks = dkr::parse_tasks(tasks_str);
      const dkr::PointResult r =
          dkr::run_point(k, gamma, cfg, 0, tasks, worker_count());
      nlohmann::json j = r.record.to_json();
      j["J_c_noiseless"] = r.J_c_noiseless;
      j["J_ulam"] = r.J_ulam;
      j["overlap_modulus"] = r.overlap_modulus;
      j["negativity_quantum"] = r.negativity_quantum;
      j["negativity_classical"] = r.negativity_classical;
      std::cout << j.dump(2) << "\n";
      return kOk;
    }
    if (emit->parsed()) {
      for (const auto& p : dkr::emit_plotdata(emit_store, figure)) {
        std::cout << p.string() << "\n";
      }
      return kOk;
    }
    if (validate_config->parsed()) {
      dkr::SweepConfig::load(validate_path);
      std::cout << "ok\n";
      return kOk;
    }
  } catch (const dkr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dkr::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  }
  std::cerr << "error: no subcommand\n";
  return kConfigError;
}
