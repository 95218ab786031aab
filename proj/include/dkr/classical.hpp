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

#ifndef DKR_CLASSICAL_HPP
#define DKR_CLASSICAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "dkr/errors.hpp"
#include "dkr/params.hpp"

namespace dkr {

/// Guard on |n|: dissipative dynamics should stay bounded, so exceeding
/// this signals a bug or pathological parameters rather than physics.
inline constexpr double kMomentumGuard = 1.0e6;

/// One phase-space point. x lives on the real line (not reduced mod 2*pi);
/// the rescaled momentum p = tau * n is always a derived view.
struct PhasePoint {
  double x = 0.0;
  double n = 0.0;
};

/// One period of the dissipative map, in rescaled momentum p = tau n:
///   p' = gamma p + k [sin x + a sin(2x + phi)]
///   x' = x + p'            (the drift uses the already-updated p')
/// Stored state keeps n = p / tau, so the drive on n carries 1/tau.
inline PhasePoint step_deterministic(const PhasePoint& s, const Params& p,
                                     double guard = kMomentumGuard) {
  const double drive =
      p.kick_n() * (std::sin(s.x) + p.a() * std::sin(2.0 * s.x + p.phi()));
  const double n_new = p.gamma() * s.n + drive;
  if (!(std::abs(n_new) <= guard)) {
    throw OverflowError("classical step exceeded momentum guard", 0);
  }
  return PhasePoint{s.x + p.tau() * n_new, n_new};
}

/// Thermal variant: the Gaussian kick xi (variance hbar_eff on p) lands
/// on p' before the position drift, so x' = x + p' + xi.
inline PhasePoint step_thermal(const PhasePoint& s, const Params& p,
                               SmallRng& rng, double guard = kMomentumGuard) {
  if (p.gamma() >= 1.0) {
    throw DomainError("step_thermal: noise undefined at gamma = 1");
  }
  const double sigma = std::sqrt(p.noise_variance()) / p.tau();
  const double drive =
      p.kick_n() * (std::sin(s.x) + p.a() * std::sin(2.0 * s.x + p.phi()));
  const double n_new = p.gamma() * s.n + drive + sigma * rng.gauss();
  if (!(std::abs(n_new) <= guard)) {
    throw OverflowError("classical step exceeded momentum guard", 0);
  }
  return PhasePoint{s.x + p.tau() * n_new, n_new};
}

/// A set of trajectories with one private RNG stream per point, so
/// evolution results cannot depend on iteration order or thread count.
struct Ensemble {
  std::vector<PhasePoint> points;
  std::vector<std::uint64_t> rng_states;  // one SmallRng state per point
  SeedLineage seed;
  std::uint64_t steps_taken = 0;
};

/// Initial condition used throughout: uniform on x in [0, 2*pi),
/// p in [-pi, pi]. Each point draws from its own derived stream.
inline Ensemble make_uniform_ensemble(std::size_t n_points,
                                      const SeedLineage& lineage,
                                      const Params& params) {
  if (n_points == 0) throw DomainError("ensemble must be non-empty");
  Ensemble e;
  e.seed = lineage;
  e.points.resize(n_points);
  e.rng_states.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    SmallRng rng(derive_seed({derive_seed(lineage), i, 0}));
    const double x = rng.uniform(0.0, kTwoPi);
    const double pmom = rng.uniform(-kPi, kPi);
    e.points[i] = PhasePoint{x, pmom / params.tau()};
    e.rng_states[i] = rng.state();
  }
  return e;
}

inline Ensemble make_ensemble(std::vector<PhasePoint> points,
                              const SeedLineage& lineage) {
  if (points.empty()) throw DomainError("ensemble must be non-empty");
  Ensemble e;
  e.seed = lineage;
  e.rng_states.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    e.rng_states[i] = derive_seed({derive_seed(lineage), i, 1});
  }
  e.points = std::move(points);
  return e;
}

/// Advances every point n_steps periods. Data-parallel over points; each
/// point owns its RNG stream, so the result is bitwise independent of the
/// thread count.
inline void evolve_ensemble(Ensemble& e, const Params& params,
                            std::uint64_t n_steps, bool noisy,
                            unsigned n_threads = 0,
                            double guard = kMomentumGuard) {
  if (noisy && params.gamma() >= 1.0) {
    throw DomainError("evolve_ensemble: thermal noise undefined at gamma = 1");
  }
  const std::size_t count = e.points.size();
  if (n_threads == 0) {
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  }
  n_threads = static_cast<unsigned>(
      std::min<std::size_t>(n_threads, count));

  std::vector<std::size_t> failed(n_threads, static_cast<std::size_t>(-1));
  auto worker = [&](unsigned t) {
    const std::size_t lo = count * t / n_threads;
    const std::size_t hi = count * (t + 1) / n_threads;
    for (std::size_t i = lo; i < hi; ++i) {
      SmallRng rng(0);
      rng.set_state(e.rng_states[i]);
      PhasePoint s = e.points[i];
      try {
        for (std::uint64_t step = 0; step < n_steps; ++step) {
          s = noisy ? step_thermal(s, params, rng, guard)
                    : step_deterministic(s, params, guard);
        }
      } catch (const OverflowError&) {
        failed[t] = i;
        return;
      }
      e.points[i] = s;
      e.rng_states[i] = rng.state();
    }
  };

  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker, t);
    for (auto& th : threads) th.join();
  }
  for (std::size_t idx : failed) {
    if (idx != static_cast<std::size_t>(-1)) {
      throw OverflowError("trajectory exceeded momentum guard", idx);
    }
  }
  e.steps_taken += n_steps;
}

struct CurrentEstimate {
  double J = 0.0;
  double std_error = 0.0;
};

/// J = <p> = tau <n> over the ensemble, with the standard error of the mean.
inline CurrentEstimate classical_current(const Ensemble& e,
                                         const Params& params) {
  const double tau = params.tau();
  double sum = 0.0;
  for (const auto& s : e.points) sum += tau * s.n;
  const double mean = sum / static_cast<double>(e.points.size());
  double var = 0.0;
  for (const auto& s : e.points) {
    const double d = tau * s.n - mean;
    var += d * d;
  }
  const auto m = static_cast<double>(e.points.size());
  const double sem = m > 1 ? std::sqrt(var / (m - 1.0) / m) : 0.0;
  return CurrentEstimate{mean, sem};
}

/// Spread of per-sub-ensemble currents; a cheap coexisting-attractor
/// diagnostic (large spread means the initial conditions split across basins).
inline double current_subensemble_spread(const Ensemble& e,
                                         const Params& params,
                                         std::size_t n_groups = 16) {
  n_groups = std::max<std::size_t>(2, std::min(n_groups, e.points.size()));
  std::vector<double> group_means(n_groups, 0.0);
  std::vector<std::size_t> group_counts(n_groups, 0);
  for (std::size_t i = 0; i < e.points.size(); ++i) {
    group_means[i % n_groups] += params.tau() * e.points[i].n;
    ++group_counts[i % n_groups];
  }
  double mean = 0.0;
  for (std::size_t gi = 0; gi < n_groups; ++gi) {
    group_means[gi] /= static_cast<double>(group_counts[gi]);
    mean += group_means[gi];
  }
  mean /= static_cast<double>(n_groups);
  double var = 0.0;
  for (double gm : group_means) var += (gm - mean) * (gm - mean);
  return std::sqrt(var / static_cast<double>(n_groups - 1));
}

struct MomentumHistogram {
  std::vector<double> p_edges;  // strictly increasing, size = bins + 1
  std::vector<double> mass;     // normalized to 1

  double p_center(std::size_t i) const {
    return 0.5 * (p_edges[i] + p_edges[i + 1]);
  }
};

/// Normalized histogram of p = tau * n with bins aligned to multiples of
/// bin_width (edges at integer multiples, so histograms from different
/// ensembles share a grid).
inline MomentumHistogram momentum_histogram(const Ensemble& e,
                                            const Params& params,
                                            double bin_width) {
  if (bin_width <= 0.0) throw DomainError("bin_width must be positive");
  double p_lo = params.tau() * e.points.front().n;
  double p_hi = p_lo;
  for (const auto& s : e.points) {
    const double p = params.tau() * s.n;
    p_lo = std::min(p_lo, p);
    p_hi = std::max(p_hi, p);
  }
  const auto lo_idx = static_cast<long long>(std::floor(p_lo / bin_width));
  auto hi_idx = static_cast<long long>(std::floor(p_hi / bin_width)) + 1;
  if (hi_idx <= lo_idx) hi_idx = lo_idx + 1;
  const auto bins = static_cast<std::size_t>(hi_idx - lo_idx);

  MomentumHistogram h;
  h.p_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.p_edges[i] = static_cast<double>(lo_idx + static_cast<long long>(i)) *
                   bin_width;
  }
  h.mass.assign(bins, 0.0);
  const double w = 1.0 / static_cast<double>(e.points.size());
  for (const auto& s : e.points) {
    const double p = params.tau() * s.n;
    auto b = static_cast<long long>(std::floor(p / bin_width)) - lo_idx;
    b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
    h.mass[static_cast<std::size_t>(b)] += w;
  }
  return h;
}

}  // namespace dkr

#endif  // DKR_CLASSICAL_HPP
