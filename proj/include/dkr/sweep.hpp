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

#ifndef DKR_SWEEP_HPP
#define DKR_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dkr/classical.hpp"
#include "dkr/compare.hpp"
#include "dkr/io.hpp"
#include "dkr/lindblad.hpp"
#include "dkr/params.hpp"
#include "dkr/ulam.hpp"
#include "dkr/wigner.hpp"

namespace dkr {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Task : unsigned { kCurrents = 1, kSpectra = 2, kEquilibrium = 4 };

inline unsigned operator|(Task a, Task b) {
  return static_cast<unsigned>(a) | static_cast<unsigned>(b);
}
inline bool has_task(unsigned mask, Task t) {
  return (mask & static_cast<unsigned>(t)) != 0;
}

inline unsigned parse_tasks(const std::string& spec_str) {
  unsigned mask = 0;
  std::istringstream in(spec_str);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = detail::trim(tok);
    if (tok.empty()) continue;
    if (tok == "currents") mask |= static_cast<unsigned>(Task::kCurrents);
    else if (tok == "spectra") mask |= static_cast<unsigned>(Task::kSpectra);
    else if (tok == "equilibrium") mask |= static_cast<unsigned>(Task::kEquilibrium);
    else throw ConfigError("unknown task: " + tok);
  }
  if (mask == 0) throw ConfigError("tasks list is empty");
  return mask;
}

inline std::string tasks_to_string(unsigned mask) {
  std::string s;
  auto add = [&s](const char* name) {
    if (!s.empty()) s += ',';
    s += name;
  };
  if (has_task(mask, Task::kCurrents)) add("currents");
  if (has_task(mask, Task::kSpectra)) add("spectra");
  if (has_task(mask, Task::kEquilibrium)) add("equilibrium");
  return s;
}

/// Full description of a parameter sweep. Defaults are the desk-scale
/// settings; everything round-trips losslessly through the flat
/// key-value config format.
struct SweepConfig {
  double k_min = 5.0;
  double k_max = 10.0;
  double k_step = 0.25;
  std::vector<double> gamma_list{0.4, 0.45, 0.5, 0.55, 0.6};
  double hbar_eff = kDefaultHbarEff;
  double a = 0.5;
  double phi = kPi / 2.0;

  std::uint64_t ensemble_size = 100000;
  std::uint64_t transient_steps = 1000;
  std::uint64_t measurement_steps = 100;

  int m_cells = 128;
  std::uint64_t n_tr = 10000;
  double p_min = -20.0;
  double p_max = 20.0;

  int n_dim = 128;
  int substeps = 0;  // 0 = stability-scaled default

  int k_eigs = 50;
  int krylov_dim = 120;
  double tol = 1e-8;

  std::vector<double> thresholds{0.25, 0.35, 0.4};
  std::uint64_t master_seed = 1;
  std::string output_dir = "sweep_out";
  unsigned tasks = Task::kCurrents | Task::kSpectra |
                   static_cast<unsigned>(Task::kEquilibrium);

  std::vector<double> k_values() const {
    std::vector<double> ks;
    for (int i = 0;; ++i) {
      const double k = k_min + i * k_step;
      if (k > k_max + 1e-9 * std::max(1.0, std::abs(k_max))) break;
      ks.push_back(k);
    }
    return ks;
  }

  void validate() const {
    if (!(k_step > 0.0)) throw ConfigError("k_step must be positive");
    if (!(k_min <= k_max)) throw ConfigError("need k_min <= k_max");
    if (gamma_list.empty()) throw ConfigError("gamma_list is empty");
    for (double g : gamma_list) {
      if (!(g > 0.0 && g < 1.0)) {
        throw ConfigError("sweep gammas must lie in (0, 1)");
      }
    }
    if (!(hbar_eff > 0.0)) throw ConfigError("hbar_eff must be positive");
    if (ensemble_size < 2) throw ConfigError("ensemble_size must be >= 2");
    if (m_cells < 2) throw ConfigError("M must be >= 2");
    if (n_tr < 1) throw ConfigError("n_tr must be >= 1");
    if (!(p_min < p_max)) throw ConfigError("need p_min < p_max");
    if (n_dim < 8 || n_dim % 2 != 0) throw ConfigError("N must be even, >= 8");
    if (substeps < 0) throw ConfigError("substeps must be >= 0");
    if (k_eigs < 1) throw ConfigError("k_eigs must be >= 1");
    if (krylov_dim != 0 && krylov_dim < 2 * k_eigs) {
      throw ConfigError("krylov_dim must be 0 (auto) or >= 2 * k_eigs");
    }
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (thresholds.empty()) throw ConfigError("thresholds list is empty");
    for (double t : thresholds) {
      if (!(t > 0.0 && t <= 1.0)) {
        throw ConfigError("thresholds must lie in (0, 1]");
      }
    }
    if (measurement_steps < 1) throw ConfigError("measurement_steps >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
    if (tasks == 0) throw ConfigError("tasks mask is empty");
  }

  Params params_at(double k, double gamma) const {
    return Params(k, gamma, hbar_eff, a, phi);
  }

  KeyValueMap to_key_values() const {
    auto fmt = [](double v) { return fmt_double(v); };
    auto fmt_list = [&fmt](const std::vector<double>& vs) {
      std::string s;
      for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) s += ' ';
        s += fmt(vs[i]);
      }
      return s;
    };
    return KeyValueMap{
        {"k_min", fmt(k_min)},
        {"k_max", fmt(k_max)},
        {"k_step", fmt(k_step)},
        {"gamma_list", fmt_list(gamma_list)},
        {"hbar_eff", fmt(hbar_eff)},
        {"a", fmt(a)},
        {"phi", fmt(phi)},
        {"ensemble_size", std::to_string(ensemble_size)},
        {"transient_steps", std::to_string(transient_steps)},
        {"measurement_steps", std::to_string(measurement_steps)},
        {"M", std::to_string(m_cells)},
        {"n_tr", std::to_string(n_tr)},
        {"p_min", fmt(p_min)},
        {"p_max", fmt(p_max)},
        {"N", std::to_string(n_dim)},
        {"substeps", std::to_string(substeps)},
        {"k_eigs", std::to_string(k_eigs)},
        {"krylov_dim", std::to_string(krylov_dim)},
        {"tol", fmt(tol)},
        {"thresholds", fmt_list(thresholds)},
        {"master_seed", std::to_string(master_seed)},
        {"output_dir", output_dir},
        {"tasks", tasks_to_string(tasks)},
    };
  }

  static SweepConfig from_key_values(const KeyValueMap& kv) {
    SweepConfig c;
    auto set_d = [&kv](const std::string& key, double& target) {
      auto it = kv.find(key);
      if (it != kv.end()) {
        try {
          target = std::stod(it->second);
        } catch (const std::exception&) {
          throw ConfigError("bad numeric value for " + key + ": " + it->second);
        }
      }
    };
    auto set_u = [&kv](const std::string& key, auto& target) {
      auto it = kv.find(key);
      if (it != kv.end()) {
        try {
          target = static_cast<std::decay_t<decltype(target)>>(
              std::stoull(it->second));
        } catch (const std::exception&) {
          throw ConfigError("bad integer value for " + key + ": " + it->second);
        }
      }
    };
    auto set_list = [&kv](const std::string& key, std::vector<double>& target) {
      auto it = kv.find(key);
      if (it == kv.end()) return;
      std::vector<double> vs;
      std::istringstream in(it->second);
      double v;
      while (in >> v) vs.push_back(v);
      if (!in.eof()) throw ConfigError("bad list for " + key + ": " + it->second);
      target = std::move(vs);
    };
    set_d("k_min", c.k_min);
    set_d("k_max", c.k_max);
    set_d("k_step", c.k_step);
    set_list("gamma_list", c.gamma_list);
    set_d("hbar_eff", c.hbar_eff);
    set_d("a", c.a);
    set_d("phi", c.phi);
    set_u("ensemble_size", c.ensemble_size);
    set_u("transient_steps", c.transient_steps);
    set_u("measurement_steps", c.measurement_steps);
    int m_tmp = c.m_cells;
    set_u("M", m_tmp);
    c.m_cells = m_tmp;
    set_u("n_tr", c.n_tr);
    set_d("p_min", c.p_min);
    set_d("p_max", c.p_max);
    int n_tmp = c.n_dim;
    set_u("N", n_tmp);
    c.n_dim = n_tmp;
    int s_tmp = c.substeps;
    set_u("substeps", s_tmp);
    c.substeps = s_tmp;
    int ke_tmp = c.k_eigs;
    set_u("k_eigs", ke_tmp);
    c.k_eigs = ke_tmp;
    int kd_tmp = c.krylov_dim;
    set_u("krylov_dim", kd_tmp);
    c.krylov_dim = kd_tmp;
    set_d("tol", c.tol);
    set_list("thresholds", c.thresholds);
    set_u("master_seed", c.master_seed);
    if (auto it = kv.find("output_dir"); it != kv.end()) c.output_dir = it->second;
    if (auto it = kv.find("tasks"); it != kv.end()) c.tasks = parse_tasks(it->second);
    c.validate();
    return c;
  }

  static SweepConfig load(const std::string& path) {
    return from_key_values(parse_key_value_file(path));
  }

  void save(const fs::path& path) const {
    std::ostringstream out;
    write_key_values(out, to_key_values());
    atomic_write(path, out.str());
  }
};

// ---------------------------------------------------------------------------
// Point pipeline
// ---------------------------------------------------------------------------

/// Stream indices for derive_seed at a sweep point; keeping them distinct
/// decouples every stochastic stage from the others.
enum class Stream : std::uint64_t {
  kThermalEnsemble = 0,
  kNoiselessEnsemble = 1,
  kUlam = 2,
  kArnoldiClassical = 3,
  kArnoldiQuantum = 4,
};

struct ClassicalMeasurement {
  double J = 0.0;          // time-averaged over the measurement window
  double std_error = 0.0;  // SEM of the final-state ensemble mean
  MomentumHistogram histogram;
};

/// Stages 1-2: thermal or noiseless classical ensemble with transient,
/// then J averaged over the measurement window; histogram of the final
/// ensemble with bins of width 0.1 in p.
inline ClassicalMeasurement measure_classical(const SweepConfig& cfg,
                                              const Params& params,
                                              std::uint64_t point_index,
                                              bool noisy,
                                              unsigned n_threads = 0) {
  const SeedLineage lineage{cfg.master_seed, point_index,
                            static_cast<std::uint64_t>(
                                noisy ? Stream::kThermalEnsemble
                                      : Stream::kNoiselessEnsemble)};
  Ensemble e = make_uniform_ensemble(cfg.ensemble_size, lineage, params);
  evolve_ensemble(e, params, cfg.transient_steps, noisy, n_threads);
  double j_sum = 0.0;
  CurrentEstimate last{};
  for (std::uint64_t s = 0; s < cfg.measurement_steps; ++s) {
    evolve_ensemble(e, params, 1, noisy, n_threads);
    last = classical_current(e, params);
    j_sum += last.J;
  }
  ClassicalMeasurement out;
  out.J = j_sum / static_cast<double>(cfg.measurement_steps);
  out.std_error = last.std_error;
  out.histogram = momentum_histogram(e, params, 0.1);
  return out;
}

struct PointResult {
  ComparisonRecord record;
  double J_c_noiseless = 0.0;
  double J_ulam = 0.0;  // current of the Ulam invariant vector
  std::optional<MomentumHistogram> hist_thermal;
  std::optional<MomentumHistogram> hist_noiseless;
  std::optional<Eigen::VectorXd> quantum_populations;  // rho_nn
  std::optional<Spectrum> spectrum_classical;
  std::optional<Spectrum> spectrum_quantum;
  std::optional<Eigen::VectorXd> ulam_invariant;
  UlamGrid ulam_grid;
  std::optional<PhaseField> wigner_quantum;   // physical N x N field
  std::optional<PhaseField> wigner_classical;
  double overlap_modulus = 0.0;
  double negativity_quantum = 0.0;
  double negativity_classical = 0.0;
};

/// Tags pipeline-stage failures with the stage name.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_name(stage) {}
  std::string stage_name;
};

/// Single-point pipeline. Stages run in fixed order, gated by the task
/// mask: currents -> (1) thermal MC, (2) noiseless MC, (4) quantum steady
/// state; spectra -> (3) Ulam spectrum, (5) quantum spectrum, (6) deltas;
/// equilibrium -> (3) invariant, (4) steady state, (7) Wigner overlap.
inline PointResult run_point(double k, double gamma, const SweepConfig& cfg,
                             std::uint64_t point_index, unsigned tasks,
                             unsigned n_threads = 0) {
  const Params params = cfg.params_at(k, gamma);
  PointResult r;
  r.record.k = k;
  r.record.gamma = gamma;

  const bool want_currents = has_task(tasks, Task::kCurrents);
  const bool want_spectra = has_task(tasks, Task::kSpectra);
  const bool want_equilibrium = has_task(tasks, Task::kEquilibrium);

  auto stage = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };

  // (1) thermal classical ensemble
  if (want_currents) {
    stage("classical-thermal", [&] {
      auto m = measure_classical(cfg, params, point_index, true, n_threads);
      r.record.J_c_thermal = m.J;
      r.hist_thermal = std::move(m.histogram);
    });
    // (2) noiseless guide value
    stage("classical-noiseless", [&] {
      auto m = measure_classical(cfg, params, point_index, false, n_threads);
      r.J_c_noiseless = m.J;
      r.hist_noiseless = std::move(m.histogram);
    });
  }

  // (3) Ulam build
  std::optional<TransferMatrix> tm;
  if (want_spectra || want_equilibrium) {
    stage("ulam-build", [&] {
      UlamGrid grid = build_grid(cfg.m_cells, cfg.p_min, cfg.p_max);
      tm = build_ulam_matrix_autowiden(
          grid, params, cfg.n_tr, /*noisy=*/true,
          derive_seed({cfg.master_seed, point_index,
                       static_cast<std::uint64_t>(Stream::kUlam)}),
          kDefaultLeakTolerance, n_threads);
      r.ulam_grid = tm->grid;
    });
    stage("ulam-invariant", [&] {
      r.ulam_invariant = invariant_density(
          *tm, cfg.tol,
          derive_seed({cfg.master_seed, point_index,
                       static_cast<std::uint64_t>(Stream::kArnoldiClassical)}));
      r.J_ulam = pf_current(*r.ulam_invariant, tm->grid);
    });
  }
  if (want_spectra) {
    stage("ulam-spectrum", [&] {
      LinearAction apply = [&tm](const VectorC& in, VectorC& out) {
        out = tm->s * in;
      };
      ArnoldiOptions opts;
      opts.tol = cfg.tol;
      opts.krylov_dim = cfg.krylov_dim;
      opts.seed = derive_seed({cfg.master_seed, point_index,
                               static_cast<std::uint64_t>(
                                   Stream::kArnoldiClassical)});
      opts.want_vectors = false;
      r.spectrum_classical =
          arnoldi_topk(apply, tm->grid.cell_count(), cfg.k_eigs, opts);
    });
  }

  // (4) quantum steady state
  std::optional<ChannelApplier> channel;
  std::optional<DensityMatrix> steady;
  if (want_currents || want_equilibrium) {
    stage("quantum-steady-state", [&] {
      channel.emplace(params, HilbertSpec(cfg.n_dim), cfg.substeps);
      steady = quantum_steady_state(
          *channel, cfg.tol,
          derive_seed({cfg.master_seed, point_index,
                       static_cast<std::uint64_t>(Stream::kArnoldiQuantum)}));
      r.record.J_q = quantum_current(*steady, params, channel->spec());
      r.quantum_populations = steady->diagonal().real();
    });
  }

  // (5) quantum spectrum
  if (want_spectra) {
    stage("quantum-spectrum", [&] {
      if (!channel) channel.emplace(params, HilbertSpec(cfg.n_dim), cfg.substeps);
      ArnoldiOptions opts;
      opts.tol = cfg.tol;
      opts.krylov_dim = cfg.krylov_dim;
      opts.seed = derive_seed({cfg.master_seed, point_index,
                               static_cast<std::uint64_t>(
                                   Stream::kArnoldiQuantum)});
      opts.want_vectors = false;
      r.spectrum_quantum = quantum_spectrum(*channel, cfg.k_eigs, opts);
    });
    // (6) spectral distances
    stage("spectral-distance", [&] {
      for (double thr : cfg.thresholds) {
        r.record.delta_spectral[thr] =
            spectral_distance(*r.spectrum_classical, *r.spectrum_quantum, thr);
      }
    });
  }

  // (7) Wigner comparison
  if (want_equilibrium) {
    stage("wigner-overlap", [&] {
      const PhaseField symbol = weyl_wigner_symbol(*steady, params);
      r.wigner_quantum = remove_ghosts(symbol);
      r.wigner_classical = resample_classical(*r.ulam_invariant, tm->grid,
                                              params, cfg.n_dim);
      r.overlap_modulus = std::abs(overlap(*r.wigner_quantum,
                                           *r.wigner_classical));
      r.negativity_quantum = negativity_fraction(*r.wigner_quantum);
      r.negativity_classical = negativity_fraction(*r.wigner_classical);
    });
  }

  if (want_currents) {
    const CurrentDifference d =
        current_difference(r.record.J_c_thermal, r.record.J_q);
    r.record.sign_diff = d.sign_diff;
    r.record.sign_diff_half_integer = d.half_integer;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Result store, ledger, sweep driver
// ---------------------------------------------------------------------------

struct LedgerEntry {
  double k = 0.0;
  double gamma = 0.0;
  std::string task;    // "currents" | "spectra" | "equilibrium"
  std::string status;  // "done" | "failed"
  std::string error;   // error class + message when failed
};

/// On-disk layout:
///   <dir>/config.cfg       frozen copy of the sweep configuration
///   <dir>/ledger.csv       one row per completed or failed (point, task)
///   <dir>/records.csv      ComparisonRecord data rows, grid order
///   <dir>/records.json     same records for archival
///   <dir>/points/<tag>/    per-point artifacts
///   <dir>/.lock            single-owner lock file
class SweepResultStore {
 public:
  explicit SweepResultStore(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }
  fs::path ledger_path() const { return dir_ / "ledger.csv"; }
  fs::path records_path() const { return dir_ / "records.csv"; }
  fs::path config_path() const { return dir_ / "config.cfg"; }

  static std::string point_tag(double k, double gamma) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "k%.6f_g%.6f", k, gamma);
    return buf;
  }

  fs::path point_dir(double k, double gamma) const {
    return dir_ / "points" / point_tag(k, gamma);
  }

  void initialize(const SweepConfig& cfg) {
    fs::create_directories(dir_ / "points");
    cfg.save(config_path());
  }

  /// Acquires the single-owner lock; throws if another sweep owns it.
  void lock() {
    const fs::path p = dir_ / ".lock";
    if (fs::exists(p)) {
      throw ConfigError("store is locked by another sweep: " + p.string());
    }
    atomic_write(p, "locked\n");
    locked_ = true;
  }

  void unlock() {
    if (locked_) {
      std::error_code ec;
      fs::remove(dir_ / ".lock", ec);
      locked_ = false;
    }
  }

  ~SweepResultStore() { unlock(); }

  std::vector<LedgerEntry> read_ledger() const {
    std::vector<LedgerEntry> entries;
    if (!fs::exists(ledger_path())) return entries;
    for (const auto& row : read_csv(ledger_path())) {
      if (row.size() < 4 || row[0] == "k") continue;
      LedgerEntry e;
      e.k = std::stod(row[0]);
      e.gamma = std::stod(row[1]);
      e.task = row[2];
      e.status = row[3];
      if (row.size() > 4) e.error = row[4];
      entries.push_back(std::move(e));
    }
    return entries;
  }

  void append_ledger(const LedgerEntry& e) {
    std::lock_guard<std::mutex> guard(mu_);
    const bool fresh = !fs::exists(ledger_path());
    std::ofstream out(ledger_path(), std::ios::app);
    if (fresh) out << "k,gamma,task,status,error\n";
    std::string err = e.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << fmt_double(e.k) << ',' << fmt_double(e.gamma) << ',' << e.task
        << ',' << e.status << ',' << err << '\n';
  }

  /// True when the ledger marks (k, gamma, task) done and the record
  /// artifact still exists and parses.
  bool is_complete(double k, double gamma, const std::string& task) const {
    for (const auto& e : read_ledger()) {
      if (e.task == task && e.status == "done" &&
          std::abs(e.k - k) < 1e-12 && std::abs(e.gamma - gamma) < 1e-12) {
        const fs::path rec = point_dir(k, gamma) / ("record_" + task + ".json");
        if (!fs::exists(rec)) return false;
        try {
          return nlohmann::json::parse(read_file(rec)).is_object();
        } catch (const std::exception&) {
          return false;
        }
      }
    }
    return false;
  }

 private:
  fs::path dir_;
  std::mutex mu_;
  bool locked_ = false;
};

namespace detail {

inline void write_spectrum_csv(const fs::path& path, const Spectrum& spec) {
  std::string body = "re,im,residual\n";
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    body += csv_line({fmt_double(spec.eigenvalues[i].real()),
                      fmt_double(spec.eigenvalues[i].imag()),
                      fmt_double(i < spec.residuals.size()
                                     ? spec.residuals[i] : 0.0)});
  }
  atomic_write(path, body);
}

inline Spectrum read_spectrum_csv(const fs::path& path) {
  Spectrum s;
  for (const auto& row : read_csv(path)) {
    if (row.size() < 2 || row[0] == "re") continue;
    s.eigenvalues.emplace_back(std::stod(row[0]), std::stod(row[1]));
    if (row.size() > 2) s.residuals.push_back(std::stod(row[2]));
  }
  return s;
}

inline void write_histogram_csv(const fs::path& path,
                                const MomentumHistogram& h) {
  std::string body = "p_center,mass\n";
  for (std::size_t i = 0; i < h.mass.size(); ++i) {
    body += csv_line({fmt_double(h.p_center(i)), fmt_double(h.mass[i])});
  }
  atomic_write(path, body);
}

inline void write_field_csv(const fs::path& path, const PhaseField& f) {
  std::string body;
  for (int r = 0; r < f.values.rows(); ++r) {
    std::string line;
    for (int c = 0; c < f.values.cols(); ++c) {
      if (c) line += ',';
      line += fmt_double(f.values(r, c).real());
    }
    body += line + '\n';
  }
  atomic_write(path, body);
}

/// Sign-split rendering channels: positive part and negated negative part.
inline void write_field_signsplit(const fs::path& pos_path,
                                  const fs::path& neg_path,
                                  const PhaseField& f) {
  Eigen::MatrixXd re = f.values.real();
  Eigen::MatrixXd pos = re.cwiseMax(0.0);
  Eigen::MatrixXd neg = (-re).cwiseMax(0.0);
  write_binary_matrix(pos_path, pos, "field/positive");
  write_binary_matrix(neg_path, neg, "field/negative");
}

}  // namespace detail

/// Persists one point's artifacts for the given task and marks the ledger.
inline void persist_point(SweepResultStore& store, const PointResult& r,
                          const std::string& task) {
  const fs::path pd = store.point_dir(r.record.k, r.record.gamma);
  fs::create_directories(pd);

  if (task == "currents") {
    if (r.hist_thermal) {
      detail::write_histogram_csv(pd / "hist_thermal.csv", *r.hist_thermal);
    }
    if (r.hist_noiseless) {
      detail::write_histogram_csv(pd / "hist_noiseless.csv", *r.hist_noiseless);
    }
    if (r.quantum_populations) {
      Eigen::MatrixXd m = *r.quantum_populations;
      write_binary_matrix(pd / "quantum_populations.bin", m, "populations");
    }
  } else if (task == "spectra") {
    if (r.spectrum_classical) {
      detail::write_spectrum_csv(pd / "spectrum_classical.csv",
                                 *r.spectrum_classical);
    }
    if (r.spectrum_quantum) {
      detail::write_spectrum_csv(pd / "spectrum_quantum.csv",
                                 *r.spectrum_quantum);
    }
  } else if (task == "equilibrium") {
    if (r.ulam_invariant) {
      Eigen::MatrixXd m = *r.ulam_invariant;
      write_binary_matrix(pd / "ulam_invariant.bin", m, "invariant");
    }
    if (r.wigner_quantum) {
      detail::write_field_csv(pd / "wigner_quantum.csv", *r.wigner_quantum);
      detail::write_field_signsplit(pd / "wigner_quantum_pos.bin",
                                    pd / "wigner_quantum_neg.bin",
                                    *r.wigner_quantum);
    }
    if (r.wigner_classical) {
      detail::write_field_csv(pd / "wigner_classical.csv", *r.wigner_classical);
    }
  }

  nlohmann::json rec = r.record.to_json();
  rec["task"] = task;
  rec["J_c_noiseless"] = r.J_c_noiseless;
  rec["J_ulam"] = r.J_ulam;
  rec["overlap_modulus"] = r.overlap_modulus;
  rec["negativity_quantum"] = r.negativity_quantum;
  rec["negativity_classical"] = r.negativity_classical;
  atomic_write(pd / ("record_" + task + ".json"), rec.dump(2) + "\n");
}

struct SweepOutcome {
  int points_total = 0;
  int tasks_run = 0;
  int tasks_skipped = 0;
  int tasks_failed = 0;
};

namespace detail {

inline std::vector<std::string> task_names(unsigned mask) {
  std::vector<std::string> names;
  if (has_task(mask, Task::kCurrents)) names.emplace_back("currents");
  if (has_task(mask, Task::kSpectra)) names.emplace_back("spectra");
  if (has_task(mask, Task::kEquilibrium)) names.emplace_back("equilibrium");
  return names;
}

inline unsigned task_mask_of(const std::string& name) {
  return parse_tasks(name);
}

}  // namespace detail

/// Reassembles records.csv / records.json from per-point record artifacts
/// in grid order, so the data rows are identical no matter how many
/// workers produced them.
inline void emit_records(SweepResultStore& store, const SweepConfig& cfg) {
  std::string csv =
      "k,gamma,J_c_thermal,J_q,J_c_noiseless,J_ulam,sign_diff,"
      "sign_diff_half_integer,overlap_modulus,negativity_quantum";
  for (double thr : cfg.thresholds) csv += ",delta_" + fmt_double(thr);
  csv += '\n';
  nlohmann::json all = nlohmann::json::array();

  for (double gamma : cfg.gamma_list) {
    for (double k : cfg.k_values()) {
      // Merge every task record present for the point.
      nlohmann::json merged;
      for (const auto& task : detail::task_names(cfg.tasks)) {
        const fs::path rec =
            store.point_dir(k, gamma) / ("record_" + task + ".json");
        if (!fs::exists(rec)) continue;
        nlohmann::json j = nlohmann::json::parse(read_file(rec));
        if (merged.is_null()) {
          merged = j;
        } else {
          for (auto& [key, val] : j.items()) {
            const bool keep_existing =
                (key == "J_c_thermal" || key == "J_q" || key == "sign_diff" ||
                 key == "sign_diff_half_integer") &&
                merged.contains("task") &&
                merged["task"] == "currents";
            if (key == "delta_spectral" && val.is_object() && !val.empty()) {
              merged[key] = val;
            } else if (!keep_existing || !merged.contains(key)) {
              if (val.is_number() && val.get<double>() == 0.0 &&
                  merged.contains(key)) {
                continue;  // zero default from a task that skipped the stage
              }
              merged[key] = val;
            }
          }
        }
      }
      if (merged.is_null()) continue;
      merged.erase("task");
      all.push_back(merged);

      auto num = [&merged](const char* key) {
        return merged.contains(key) ? merged[key].get<double>() : 0.0;
      };
      std::vector<std::string> cells{
          fmt_double(k), fmt_double(gamma),
          fmt_double(num("J_c_thermal")), fmt_double(num("J_q")),
          fmt_double(num("J_c_noiseless")), fmt_double(num("J_ulam")),
          fmt_double(num("sign_diff")),
          merged.value("sign_diff_half_integer", false) ? "1" : "0",
          fmt_double(num("overlap_modulus")),
          fmt_double(num("negativity_quantum"))};
      for (double thr : cfg.thresholds) {
        double d = 0.0;
        if (merged.contains("delta_spectral")) {
          const auto& ds = merged["delta_spectral"];
          const std::string key = std::to_string(thr);
          if (ds.contains(key)) d = ds[key].get<double>();
        }
        cells.push_back(fmt_double(d));
      }
      csv += csv_line(cells);
    }
  }
  atomic_write(store.records_path(), csv);
  atomic_write(store.dir() / "records.json", all.dump(2) + "\n");
}

/// Runs (or resumes) the sweep. Points are independent jobs over a worker
/// pool; each (point, task) is checkpointed separately. Failures are
/// ledgered and the sweep continues.
inline SweepOutcome run_sweep(const SweepConfig& cfg, unsigned n_workers = 0,
                              bool force = false) {
  cfg.validate();
  SweepResultStore store(cfg.output_dir);
  store.initialize(cfg);
  store.lock();

  struct Job {
    double k;
    double gamma;
    std::uint64_t point_index;
    std::string task;
  };
  std::vector<Job> jobs;
  std::uint64_t point_index = 0;
  SweepOutcome outcome;
  for (double gamma : cfg.gamma_list) {
    for (double k : cfg.k_values()) {
      for (const auto& task : detail::task_names(cfg.tasks)) {
        if (!force && store.is_complete(k, gamma, task)) {
          ++outcome.tasks_skipped;
          continue;
        }
        jobs.push_back(Job{k, gamma, point_index, task});
      }
      ++point_index;
    }
  }
  outcome.points_total = static_cast<int>(point_index);

  if (n_workers == 0) {
    n_workers = std::max(1u, std::thread::hardware_concurrency());
  }
  n_workers = static_cast<unsigned>(
      std::min<std::size_t>(n_workers, std::max<std::size_t>(jobs.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::atomic<int> failed{0};
  std::atomic<int> run_count{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      LedgerEntry entry{job.k, job.gamma, job.task, "done", ""};
      try {
        PointResult r = run_point(job.k, job.gamma, cfg, job.point_index,
                                  detail::task_mask_of(job.task),
                                  /*n_threads=*/1);
        persist_point(store, r, job.task);
      } catch (const std::exception& e) {
        entry.status = "failed";
        entry.error = e.what();
        ++failed;
      }
      store.append_ledger(entry);
      ++run_count;
    }
  };

  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  outcome.tasks_run = run_count.load();
  outcome.tasks_failed = failed.load();
  emit_records(store, cfg);
  store.unlock();
  return outcome;
}

// ---------------------------------------------------------------------------
// Plot-data emission
// ---------------------------------------------------------------------------

/// Writes the plain-CSV tables behind each figure analogue. Missing
/// prerequisites raise MissingArtifactError naming the absent entries.
inline std::vector<fs::path> emit_plotdata(const fs::path& store_dir,
                                           const std::string& figure) {
  SweepResultStore store(store_dir);
  if (!fs::exists(store.config_path())) {
    throw MissingArtifactError("no sweep config in store: " +
                               store_dir.string());
  }
  const SweepConfig cfg = SweepConfig::load(store.config_path().string());
  std::vector<fs::path> written;

  auto require = [&store](double k, double gamma,
                          const std::string& file) -> fs::path {
    const fs::path p = store.point_dir(k, gamma) / file;
    if (!fs::exists(p)) {
      throw MissingArtifactError("missing artifact: " + p.string());
    }
    return p;
  };

  if (figure == "fig1") {
    if (!fs::exists(store.records_path())) {
      throw MissingArtifactError("missing records.csv; run the sweep first");
    }
    std::string body = "k,gamma,abs_diff,sign_diff\n";
    bool any = false;
    for (const auto& row : read_csv(store.records_path())) {
      if (row.size() < 7 || row[0] == "k") continue;
      const double jc = std::stod(row[2]);
      const double jq = std::stod(row[3]);
      body += csv_line({row[0], row[1], fmt_double(std::abs(jc - jq)), row[6]});
      any = true;
    }
    if (!any) throw MissingArtifactError("records.csv has no data rows");
    const fs::path out = store_dir / "fig1.csv";
    atomic_write(out, body);
    written.push_back(out);
  } else if (figure == "fig2") {
    for (double gamma : cfg.gamma_list) {
      std::string body = "k";
      for (double thr : cfg.thresholds) body += ",delta_" + fmt_double(thr);
      body += ",J_c_noiseless\n";
      for (double k : cfg.k_values()) {
        const fs::path rec = require(k, gamma, "record_spectra.json");
        nlohmann::json j = nlohmann::json::parse(read_file(rec));
        std::vector<std::string> cells{fmt_double(k)};
        for (double thr : cfg.thresholds) {
          cells.push_back(fmt_double(
              j["delta_spectral"].value(std::to_string(thr), 0.0)));
        }
        double jc0 = j.value("J_c_noiseless", 0.0);
        if (jc0 == 0.0) {
          const fs::path cur = store.point_dir(k, gamma) / "record_currents.json";
          if (fs::exists(cur)) {
            jc0 = nlohmann::json::parse(read_file(cur))
                      .value("J_c_noiseless", 0.0);
          }
        }
        cells.push_back(fmt_double(jc0));
        body += csv_line(cells);
      }
      char name[48];
      std::snprintf(name, sizeof(name), "fig2_g%.6f.csv", gamma);
      const fs::path out = store_dir / name;
      atomic_write(out, body);
      written.push_back(out);
    }
  } else if (figure == "fig3") {
    // Per-point eigenvalue lists plus matched-pair segments where both
    // eigenvalues clear modulus 0.35.
    const double pair_cut = 0.35;
    for (double gamma : cfg.gamma_list) {
      for (double k : cfg.k_values()) {
        const Spectrum sc = detail::read_spectrum_csv(
            require(k, gamma, "spectrum_classical.csv"));
        const Spectrum sq = detail::read_spectrum_csv(
            require(k, gamma, "spectrum_quantum.csv"));
        std::string body = "re,im,source\n";
        for (const Complex& z : sc.eigenvalues) {
          body += csv_line({fmt_double(z.real()), fmt_double(z.imag()), "c"});
        }
        for (const Complex& z : sq.eigenvalues) {
          body += csv_line({fmt_double(z.real()), fmt_double(z.imag()), "q"});
        }
        std::string pairs = "re_c,im_c,re_q,im_q\n";
        for (const Complex& zq : sq.eigenvalues) {
          if (std::abs(zq) < pair_cut) continue;
          double best = std::numeric_limits<double>::infinity();
          Complex match;
          bool found = false;
          for (const Complex& zc : sc.eigenvalues) {
            if (std::abs(zc) < pair_cut) continue;
            if (std::abs(zq - zc) < best) {
              best = std::abs(zq - zc);
              match = zc;
              found = true;
            }
          }
          if (found) {
            pairs += csv_line({fmt_double(match.real()), fmt_double(match.imag()),
                               fmt_double(zq.real()), fmt_double(zq.imag())});
          }
        }
        const std::string tag = SweepResultStore::point_tag(k, gamma);
        const fs::path out1 = store_dir / ("fig3_" + tag + "_eigs.csv");
        const fs::path out2 = store_dir / ("fig3_" + tag + "_pairs.csv");
        atomic_write(out1, body);
        atomic_write(out2, pairs);
        written.push_back(out1);
        written.push_back(out2);
      }
    }
  } else if (figure == "fig4") {
    for (double gamma : cfg.gamma_list) {
      for (double k : cfg.k_values()) {
        require(k, gamma, "wigner_quantum_pos.bin");
        require(k, gamma, "wigner_quantum_neg.bin");
        written.push_back(store.point_dir(k, gamma) / "wigner_quantum_pos.bin");
        written.push_back(store.point_dir(k, gamma) / "wigner_quantum_neg.bin");
      }
    }
  } else if (figure == "fig5") {
    for (double gamma : cfg.gamma_list) {
      for (double k : cfg.k_values()) {
        const auto th = read_csv(require(k, gamma, "hist_thermal.csv"));
        const auto nl = read_csv(require(k, gamma, "hist_noiseless.csv"));
        const Eigen::MatrixXd pops = read_binary_matrix(
            require(k, gamma, "quantum_populations.bin"));
        const Params params = cfg.params_at(k, gamma);
        // Align all three on the thermal histogram's p grid.
        std::map<long long, double> mth, mnl, mq;
        auto load = [](const auto& rows, std::map<long long, double>& m) {
          for (const auto& row : rows) {
            if (row.size() < 2 || row[0] == "p_center") continue;
            m[std::llround(std::stod(row[0]) / 0.1)] = std::stod(row[1]);
          }
        };
        load(th, mth);
        load(nl, mnl);
        for (Eigen::Index i = 0; i < pops.size(); ++i) {
          const double p = params.tau() * (static_cast<double>(i) -
                                           static_cast<double>(pops.size()) / 2);
          mq[std::llround(p / 0.1)] += pops(i);
        }
        std::set<long long> keys;
        for (const auto& [kk, dummy] : mth) keys.insert(kk);
        for (const auto& [kk, dummy] : mnl) keys.insert(kk);
        for (const auto& [kk, dummy] : mq) keys.insert(kk);
        std::string body = "p,P_c_thermal,P_c,P_q\n";
        for (long long kk : keys) {
          auto at = [kk](const std::map<long long, double>& m) {
            auto it = m.find(kk);
            return it == m.end() ? 0.0 : it->second;
          };
          body += csv_line({fmt_double(kk * 0.1), fmt_double(at(mth)),
                            fmt_double(at(mnl)), fmt_double(at(mq))});
        }
        const std::string tag = SweepResultStore::point_tag(k, gamma);
        const fs::path out = store_dir / ("fig5_" + tag + ".csv");
        atomic_write(out, body);
        written.push_back(out);
      }
    }
  } else {
    throw ConfigError("unknown figure: " + figure +
                      " (expected fig1..fig5)");
  }
  return written;
}

}  // namespace dkr

#endif  // DKR_SWEEP_HPP
