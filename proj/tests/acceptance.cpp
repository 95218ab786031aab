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

// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-7 are fast property checks; 8-12 reproduce the
// reference benchmark values at desk scale and dominate the runtime.
//
// Usage: acceptance [criterion ...]   (default: all twelve)

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dkr/sweep.hpp"

using namespace dkr;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
  std::printf("%s  criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

DensityMatrix random_state(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  MatrixC a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = Complex(nd(gen), nd(gen));
  }
  DensityMatrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

double env_double(const char* name, double fallback) {
  const char* v = std::getenv(name);
  return v ? std::atof(v) : fallback;
}

// Desk-scale knobs. N is per-point: the torus must hold the attractor
// plus one kick reach (about (k/hbar)(1+a) in n), otherwise the kick
// wraps momentum around and corrupts the current.
int quantum_dim(double k, const Params& p) {
  const int n_env = static_cast<int>(env_double("DKR_ACCEPT_N", 0));
  if (n_env > 0) return n_env;
  const int reach = static_cast<int>(std::ceil(p.kick_n() * (1.0 + p.a())));
  int n = 2;
  while (n / 2 < 2 * reach) n *= 2;
  return n;
}

// --------------------------------------------------------------------------

void criterion_1() {
  bool pass = true;
  std::string detail;
  try {
    Params p(5.0, 0.5);
    UlamGrid g = build_grid(64, -12.0, 12.0);
    TransferMatrix tm = build_ulam_matrix(g, p, 2500, true, 7);
    Eigen::VectorXd colsum = Eigen::RowVectorXd::Ones(tm.s.rows()) * tm.s;
    double worst = 0.0;
    for (int j = 0; j < tm.s.cols(); ++j) {
      worst = std::max(worst, std::abs(colsum(j) - 1.0));
    }
    LinearAction apply = [&tm](const VectorC& in, VectorC& out) {
      out = tm.s * in;
    };
    const Spectrum s = arnoldi_topk(apply, g.cell_count(), 1);
    const double eig_err = std::abs(s.eigenvalues[0] - Complex(1.0, 0.0));
    const Eigen::VectorXd inv = invariant_density(tm);
    pass = worst < 1e-12 && eig_err < 1e-6 && inv.minCoeff() >= 0.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "Ulam columns stochastic (err %.1e), leading eigenvalue "
                  "(err %.1e), invariant nonnegative (min %.1e)",
                  worst, eig_err, inv.minCoeff());
    detail = buf;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("Ulam stochasticity: ") + e.what();
  }
  report(1, pass, detail);
}

void criterion_2() {
  bool pass = true;
  std::string detail;
  try {
    Params p(5.0, 0.5);
    ChannelApplier ch(p, HilbertSpec(32));
    double wt = 0.0, wh = 0.0, wp = 0.0;
    for (unsigned s = 0; s < 50; ++s) {
      const DensityMatrix out = ch.period_map(random_state(32, 100 + s));
      const StateDiagnostics d = diagnose_state(out, true);
      wt = std::max(wt, d.trace_defect);
      wh = std::max(wh, d.hermiticity_defect);
      wp = std::min(wp, d.min_eigenvalue);
    }
    const DensityMatrix r1 = random_state(32, 900);
    const DensityMatrix r2 = random_state(32, 901);
    const double lin = (ch.period_map(0.3 * r1 + 0.7 * r2) -
                        (0.3 * ch.period_map(r1) + 0.7 * ch.period_map(r2)))
                           .cwiseAbs()
                           .maxCoeff();
    pass = wt < 1e-8 && wh < 1e-9 && wp > -1e-7 && lin <= 1e-10;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "channel laws over 50 states at N=32: trace %.1e, "
                  "hermiticity %.1e, positivity %.1e, linearity %.1e",
                  wt, wh, wp, lin);
    detail = buf;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("channel laws: ") + e.what();
  }
  report(2, pass, detail);
}

void criterion_3() {
  bool pass = true;
  std::string detail;
  try {
    HilbertSpec spec(32);
    double worst = 0.0;
    for (double gamma : {0.4, 0.5, 0.6}) {
      ChannelApplier ch(Params(5.0, gamma), spec);
      for (unsigned s = 0; s < 20; ++s) {
        const DensityMatrix rho = random_state(32, 500 + s);
        auto mean_n = [&spec](const DensityMatrix& r) {
          double acc = 0.0;
          for (int i = 0; i < spec.n_dim; ++i) {
            acc += spec.n_value(i) * r(i, i).real();
          }
          return acc;
        };
        worst = std::max(worst, std::abs(mean_n(ch.dissipative_segment(rho)) -
                                         gamma * mean_n(rho)));
      }
    }
    pass = worst < 1e-6;
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "Ehrenfest <n> -> gamma <n> over 60 states (err %.1e)",
                  worst);
    detail = buf;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("Ehrenfest calibration: ") + e.what();
  }
  report(3, pass, detail);
}

void criterion_4() {
  bool pass = true;
  std::string detail;
  try {
    ChannelApplier ch(Params(5.0, 0.5), HilbertSpec(16));
    const Spectrum dense = dense_spectrum(assemble_superoperator(ch), false);
    ArnoldiOptions opts;
    opts.tol = 1e-10;
    const Spectrum mf = quantum_spectrum(ch, 12, opts);
    double worst_q = 0.0;
    for (int i = 0; i < 12; ++i) {
      // Conjugate-pair order is arbitrary; match moduli in order and each
      // eigenvalue against the nearest dense one.
      double best = 1e30;
      for (const Complex& z : dense.eigenvalues) {
        best = std::min(best, std::abs(mf.eigenvalues[i] - z));
      }
      const double mod_err =
          std::abs(std::abs(mf.eigenvalues[i]) - std::abs(dense.eigenvalues[i]));
      worst_q = std::max(worst_q, std::max(best, mod_err));
    }

    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(200, 200);
    for (int j = 0; j < 200; ++j) {
      for (int i = 0; i < 200; ++i) m(i, j) = u(gen);
      m.col(j) /= m.col(j).sum();
    }
    const MatrixC mc = m.cast<Complex>();
    const Spectrum sd = dense_spectrum(mc, false);
    LinearAction apply = [&mc](const VectorC& in, VectorC& out) {
      out = mc * in;
    };
    const Spectrum sa = arnoldi_topk(apply, 200, 10, opts);
    double worst_s = 0.0;
    for (int i = 0; i < 10; ++i) {
      worst_s = std::max(worst_s,
                         std::abs(sa.eigenvalues[i] - sd.eigenvalues[i]));
    }
    pass = worst_q < 1e-6 && worst_s < 1e-8;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "matrix-free vs dense superoperator (err %.1e), Arnoldi vs "
                  "dense stochastic (err %.1e)",
                  worst_q, worst_s);
    detail = buf;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("oracle equivalence: ") + e.what();
  }
  report(4, pass, detail);
}

void criterion_5() {
  bool pass = true;
  std::string detail;
  try {
    Params p(0.0, 0.5);
    SmallRng rng(derive_seed({3, 0, 0}));
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xi = p.tau() * step_thermal(PhasePoint{0.0, 0.0}, p, rng).n;
      sum += xi;
      sum2 += xi * xi;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    pass = std::abs(var - 0.137) < 0.01 * 0.137;
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "noise variance %.5f vs 0.137 over 1e6 samples", var);
    detail = buf;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("noise calibration: ") + e.what();
  }
  report(5, pass, detail);
}

void criterion_6() {
  bool pass = true;
  std::string detail;
  try {
    Params p(5.0, 0.5);
    const DensityMatrix rho = random_state(32, 5);
    const PhaseField red = weyl_wigner_symbol(rho, p);
    const PhaseField phys = remove_ghosts(red);
    const double self = std::abs(overlap(phys, phys) - Complex(1.0, 0.0));
    const PhaseField once = chord_filter(red);
    const double idem =
        (chord_filter(once).values - once.values).cwiseAbs().maxCoeff();
    const Eigen::VectorXd marg = momentum_marginal(phys);
    double worst_m = 0.0;
    for (int i = 0; i < 32; ++i) {
      worst_m = std::max(worst_m, std::abs(marg(i) - rho(i, i).real()));
    }
    UlamGrid g = build_grid(48, -10.0, 10.0);
    const Eigen::VectorXd inv =
        invariant_density(build_ulam_matrix(g, p, 600, true, 3));
    const double neg = negativity_fraction(resample_classical(inv, g, p, 32));
    pass = self < 1e-10 && idem < 1e-12 && worst_m < 1e-6 && neg == 0.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "Wigner self-overlap (err %.1e), filter idempotence "
                  "(%.1e), marginal (err %.1e), classical negativity (%.1e)",
                  self, idem, worst_m, neg);
    detail = buf;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("Wigner laws: ") + e.what();
  }
  report(6, pass, detail);
}

void criterion_7() {
  bool pass = true;
  std::string detail;
  try {
    auto cfg_for = [](const std::string& dir) {
      SweepConfig c;
      c.k_min = 5.0;
      c.k_max = 5.5;
      c.k_step = 0.5;
      c.gamma_list = {0.5, 0.6};
      c.ensemble_size = 400;
      c.transient_steps = 40;
      c.measurement_steps = 5;
      c.m_cells = 16;
      c.n_tr = 144;
      c.p_min = -8.0;
      c.p_max = 8.0;
      c.n_dim = 16;
      c.k_eigs = 4;
      c.krylov_dim = 0;
      c.thresholds = {0.35};
      c.output_dir = dir;
      return c;
    };
    const fs::path d1 = fs::temp_directory_path() / "dkr_accept_w1";
    const fs::path d8 = fs::temp_directory_path() / "dkr_accept_w8";
    fs::remove_all(d1);
    fs::remove_all(d8);
    const SweepOutcome o1 = run_sweep(cfg_for(d1.string()), 1);
    const SweepOutcome o8 = run_sweep(cfg_for(d8.string()), 8);
    const bool same = read_file(d1 / "records.csv") ==
                          read_file(d8 / "records.csv") &&
                      read_file(d1 / "records.json") ==
                          read_file(d8 / "records.json");
    pass = same && o1.tasks_failed == 0 && o8.tasks_failed == 0;
    detail = same ? "4-point sweep byte-identical with 1 and 8 workers"
                  : "worker-count dependence in sweep data rows";
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("sweep determinism: ") + e.what();
  }
  report(7, pass, detail);
}

// --------------------------------------------------------------------------
// Benchmark machinery shared by criteria 8, 9, 11, 12.

struct BenchmarkPoint {
  double k, gamma;
  double overlap_target, overlap_tol;
  double gap_target, gap_tol;
};

struct BenchmarkResult {
  double j_c = 0.0, j_q = 0.0, overlap_mod = 0.0;
  double negativity_q = 0.0, negativity_c = 0.0;
  MomentumHistogram hist_thermal, hist_noiseless;
  bool ok = false;
  std::string error;
};

BenchmarkResult run_benchmark(const BenchmarkPoint& bp, std::uint64_t index) {
  BenchmarkResult r;
  try {
    SweepConfig cfg;
    cfg.ensemble_size =
        static_cast<std::uint64_t>(env_double("DKR_ACCEPT_ENSEMBLE", 100000));
    // Long transient and window: the thermal current converges slowly and
    // the short defaults bias it high by ~1%.
    cfg.transient_steps = 3000;
    cfg.measurement_steps = 1000;
    cfg.m_cells = 128;
    cfg.n_tr = 10000;
    cfg.p_min = -20.0;
    cfg.p_max = 20.0;
    const Params params = cfg.params_at(bp.k, bp.gamma);
    cfg.n_dim = quantum_dim(bp.k, params);

    const auto thermal = measure_classical(cfg, params, index, true, 0);
    r.j_c = thermal.J;
    r.hist_thermal = thermal.histogram;
    const auto noiseless = measure_classical(cfg, params, index, false, 0);
    r.hist_noiseless = noiseless.histogram;

    UlamGrid grid = build_grid(cfg.m_cells, cfg.p_min, cfg.p_max);
    TransferMatrix tm = build_ulam_matrix_autowiden(
        grid, params, cfg.n_tr, true, derive_seed({cfg.master_seed, index, 2}));
    const Eigen::VectorXd inv = invariant_density(tm);

    ChannelApplier channel(params, HilbertSpec(cfg.n_dim));
    const DensityMatrix steady = quantum_steady_state(
        channel, 1e-10, derive_seed({cfg.master_seed, index, 4}));
    r.j_q = quantum_current(steady, params, channel.spec());

    const PhaseField wq = remove_ghosts(weyl_wigner_symbol(steady, params));
    const PhaseField wc = resample_classical(inv, tm.grid, params, cfg.n_dim);
    r.overlap_mod = std::abs(overlap(wq, wc));
    r.negativity_q = negativity_fraction(wq);
    r.negativity_c = negativity_fraction(wc);
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

const BenchmarkPoint kBenchmarks[3] = {
    {5.00, 0.50, 0.88, 0.05, 0.74, 0.15},
    {5.55, 0.55, 0.94, 0.04, 0.13, 0.08},
    {9.25, 0.55, 0.86, 0.05, 0.73, 0.15},
};

BenchmarkResult g_bench[3];
bool g_bench_done[3] = {false, false, false};

const BenchmarkResult& bench(int i) {
  if (!g_bench_done[i]) {
    g_bench[i] = run_benchmark(kBenchmarks[i], static_cast<std::uint64_t>(i));
    g_bench_done[i] = true;
  }
  return g_bench[i];
}

void criterion_8() {
  bool pass = true;
  std::string detail = "benchmark overlaps:";
  for (int i = 0; i < 3; ++i) {
    const BenchmarkResult& r = bench(i);
    char buf[120];
    if (!r.ok) {
      pass = false;
      detail += " [" + r.error + "]";
      continue;
    }
    const bool ok = std::abs(r.overlap_mod - kBenchmarks[i].overlap_target) <=
                    kBenchmarks[i].overlap_tol;
    std::snprintf(buf, sizeof(buf), " |O|(k=%.2f,g=%.2f)=%.3f vs %.2f+-%.2f",
                  kBenchmarks[i].k, kBenchmarks[i].gamma, r.overlap_mod,
                  kBenchmarks[i].overlap_target, kBenchmarks[i].overlap_tol);
    detail += buf;
    pass = pass && ok;
  }
  report(8, pass, detail);
}

void criterion_9() {
  bool pass = true;
  std::string detail = "benchmark current gaps:";
  for (int i = 0; i < 3; ++i) {
    const BenchmarkResult& r = bench(i);
    char buf[160];
    if (!r.ok) {
      pass = false;
      detail += " [" + r.error + "]";
      continue;
    }
    const CurrentDifference d = current_difference(r.j_c, r.j_q);
    const bool ok = std::abs(d.abs_diff - kBenchmarks[i].gap_target) <=
                        kBenchmarks[i].gap_tol &&
                    d.sign_diff == 0.0;
    std::snprintf(buf, sizeof(buf),
                  " (k=%.2f,g=%.2f): J_c=%.3f J_q=%.3f gap=%.3f vs "
                  "%.2f+-%.2f sign_diff=%g",
                  kBenchmarks[i].k, kBenchmarks[i].gamma, r.j_c, r.j_q,
                  d.abs_diff, kBenchmarks[i].gap_target, kBenchmarks[i].gap_tol,
                  d.sign_diff);
    detail += buf;
    pass = pass && ok;
  }
  report(9, pass, detail);
}

void criterion_10() {
  bool pass = true;
  std::string detail;
  try {
    const double gamma = 0.6;
    const std::vector<double> thresholds{0.25, 0.35, 0.4};
    const int k_eigs = static_cast<int>(env_double("DKR_ACCEPT_KEIGS", 50));
    std::string rows;
    double worst_04 = 0.0;
    double worst_ratio = 1.0;
    for (double k : {5.0, 6.0, 7.0, 8.0, 9.0, 10.0}) {
      Params params(k, gamma);
      UlamGrid grid = build_grid(128, -20.0, 20.0);
      TransferMatrix tm = build_ulam_matrix_autowiden(
          grid, params, 10000, true, derive_seed({1, 77, 2}));
      LinearAction apply = [&tm](const VectorC& in, VectorC& out) {
        out = tm.s * in;
      };
      ArnoldiOptions opts;
      opts.want_vectors = false;
      const Spectrum sc =
          arnoldi_topk(apply, tm.grid.cell_count(), k_eigs, opts);

      ChannelApplier channel(params, HilbertSpec(quantum_dim(k, params)));
      const Spectrum sq = quantum_spectrum(channel, k_eigs, opts);

      std::vector<double> deltas;
      for (double thr : thresholds) {
        deltas.push_back(spectral_distance(sc, sq, thr));
      }
      worst_04 = std::max(worst_04, deltas[2]);
      for (std::size_t a = 0; a < deltas.size(); ++a) {
        for (std::size_t b = 0; b < deltas.size(); ++b) {
          if (deltas[a] > 0.0 && deltas[b] > 0.0) {
            worst_ratio = std::max(worst_ratio, deltas[a] / deltas[b]);
          }
        }
      }
      char buf[120];
      std::snprintf(buf, sizeof(buf), " k=%.0f: %.4f/%.4f/%.4f", k, deltas[0],
                    deltas[1], deltas[2]);
      rows += buf;
    }
    pass = worst_04 < 0.08 && worst_ratio < 2.0;
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "spectral distances at g=0.6 (max Delta@0.4 %.4f, "
                  "threshold-curve ratio %.2f):",
                  worst_04, worst_ratio);
    detail = std::string(buf) + rows;
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("spectral-distance scale: ") + e.what();
  }
  report(10, pass, detail);
}

void criterion_11() {
  const BenchmarkResult& r = bench(0);
  bool pass = r.ok && r.negativity_q > 0.01 && r.negativity_c == 0.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "quantum Wigner negativity %.4f (> 0.01) vs classical %.1e "
                "(= 0) at (k=5, g=0.5)%s%s",
                r.negativity_q, r.negativity_c, r.ok ? "" : " error: ",
                r.ok ? "" : r.error.c_str());
  report(11, pass, buf);
}

void criterion_12() {
  const BenchmarkResult& r = bench(0);
  bool pass = false;
  char buf[200];
  if (r.ok && !r.hist_noiseless.mass.empty()) {
    // Peak of the noiseless P(p); compare window masses within +-0.5.
    std::size_t peak = 0;
    for (std::size_t i = 1; i < r.hist_noiseless.mass.size(); ++i) {
      if (r.hist_noiseless.mass[i] > r.hist_noiseless.mass[peak]) peak = i;
    }
    const double center = r.hist_noiseless.p_center(peak);
    auto window_mass = [center](const MomentumHistogram& h) {
      double acc = 0.0;
      for (std::size_t i = 0; i < h.mass.size(); ++i) {
        if (std::abs(h.p_center(i) - center) <= 0.5) acc += h.mass[i];
      }
      return acc;
    };
    const double m_free = window_mass(r.hist_noiseless);
    const double m_noisy = window_mass(r.hist_thermal);
    pass = m_free >= 2.0 * m_noisy;
    std::snprintf(buf, sizeof(buf),
                  "noiseless peak at p=%.2f holds %.3f mass vs %.3f noisy "
                  "within +-0.5 (ratio %.2f, need >= 2)",
                  center, m_free, m_noisy,
                  m_noisy > 0.0 ? m_free / m_noisy : 1e9);
  } else {
    std::snprintf(buf, sizeof(buf), "benchmark point failed: %s",
                  r.error.c_str());
  }
  report(12, pass, buf);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&wanted](int c) { return wanted.empty() || wanted.count(c); };

  if (want(1)) criterion_1();
  if (want(2)) criterion_2();
  if (want(3)) criterion_3();
  if (want(4)) criterion_4();
  if (want(5)) criterion_5();
  if (want(6)) criterion_6();
  if (want(7)) criterion_7();
  if (want(8)) criterion_8();
  if (want(9)) criterion_9();
  if (want(10)) criterion_10();
  if (want(11)) criterion_11();
  if (want(12)) criterion_12();

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
