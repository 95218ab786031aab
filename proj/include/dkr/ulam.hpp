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

#ifndef DKR_ULAM_HPP
#define DKR_ULAM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dkr/arnoldi.hpp"
#include "dkr/classical.hpp"
#include "dkr/errors.hpp"
#include "dkr/params.hpp"

namespace dkr {

/// Uniform M x M partition of the torus strip: x spans [0, 2*pi)
/// periodically, p = tau*n spans the bounded window [p_min, p_max].
struct UlamGrid {
  int m = 0;
  double p_min = 0.0;
  double p_max = 0.0;

  int cell_count() const { return m * m; }
  double x_width() const { return kTwoPi / m; }
  double p_width() const { return (p_max - p_min) / m; }

  /// Coarse-graining scale of the partition; comparable to a diffusive
  /// noise of this size.
  double h_eff_pf() const { return kTwoPi / m; }

  int cell_index(int ix, int ip) const { return ip * m + ix; }
  int ix_of(int cell) const { return cell % m; }
  int ip_of(int cell) const { return cell / m; }

  double x_lo(int ix) const { return ix * x_width(); }
  double p_lo(int ip) const { return p_min + ip * p_width(); }
  double x_center(int ix) const { return (ix + 0.5) * x_width(); }
  double p_center(int ip) const { return p_min + (ip + 0.5) * p_width(); }

  bool contains_p(double p) const { return p >= p_min && p < p_max; }

  /// Destination cell of a phase point, or -1 when p leaves the window.
  int locate(double x, double p) const {
    if (!contains_p(p)) return -1;
    double xr = std::fmod(x, kTwoPi);
    if (xr < 0.0) xr += kTwoPi;
    int ix = static_cast<int>(xr / x_width());
    if (ix >= m) ix = m - 1;  // fmod rounding at the seam
    int ip = static_cast<int>((p - p_min) / p_width());
    if (ip >= m) ip = m - 1;
    return cell_index(ix, ip);
  }
};

inline UlamGrid build_grid(int m, double p_min, double p_max) {
  if (m < 2) throw DomainError("build_grid: M must be >= 2");
  if (!(p_min < p_max)) throw DomainError("build_grid: need p_min < p_max");
  return UlamGrid{m, p_min, p_max};
}

/// Sparse column-stochastic approximation of the transfer operator:
/// S(i,j) is the fraction of trajectories moving from cell j to cell i in
/// one map step. Columns with leaked trajectories are renormalized; the
/// leak itself is kept for diagnostics.
struct TransferMatrix {
  Eigen::SparseMatrix<double> s;   // column-major
  UlamGrid grid;
  std::vector<double> column_leak; // pre-renormalization leak per column
  double global_leak = 0.0;
  std::uint64_t n_tr = 0;
};

inline constexpr double kDefaultLeakTolerance = 1e-3;

/// Builds the Ulam matrix by stratified sampling inside each source cell
/// (uniform sub-grid plus jitter; lower count variance than plain uniform
/// at equal n_tr). Column construction is parallel with one derived RNG
/// stream per cell, so the result is independent of scheduling.
inline TransferMatrix build_ulam_matrix(const UlamGrid& grid,
                                        const Params& params,
                                        std::uint64_t n_tr, bool noisy,
                                        std::uint64_t seed,
                                        double leak_tolerance = kDefaultLeakTolerance,
                                        unsigned n_threads = 0) {
  if (n_tr < 1) throw DomainError("build_ulam_matrix: n_tr must be >= 1");
  if (noisy && params.gamma() >= 1.0) {
    throw DomainError("build_ulam_matrix: thermal noise undefined at gamma = 1");
  }
  const int cells = grid.cell_count();
  const double tau = params.tau();
  const auto strata = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n_tr)));

  std::vector<std::vector<Eigen::Triplet<double>>> triplets;
  std::vector<double> column_leak(cells, 0.0);

  if (n_threads == 0) {
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  }
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, cells));
  triplets.resize(n_threads);

  auto worker = [&](unsigned t) {
    std::vector<std::uint32_t> counts(cells, 0);
    std::vector<int> touched;
    const int lo = static_cast<int>(static_cast<std::size_t>(cells) * t / n_threads);
    const int hi = static_cast<int>(static_cast<std::size_t>(cells) * (t + 1) / n_threads);
    for (int j = lo; j < hi; ++j) {
      SmallRng rng(derive_seed({seed, static_cast<std::uint64_t>(j), 0}));
      const int ix = grid.ix_of(j);
      const int ip = grid.ip_of(j);
      const double x0 = grid.x_lo(ix);
      const double p0 = grid.p_lo(ip);
      const double wx = grid.x_width();
      const double wp = grid.p_width();
      touched.clear();
      std::uint64_t leaked = 0;
      for (std::uint64_t tr = 0; tr < n_tr; ++tr) {
        double fx;
        double fp;
        if (tr < strata * strata) {
          const std::uint64_t sx = tr % strata;
          const std::uint64_t sp = tr / strata;
          fx = (static_cast<double>(sx) + rng.uniform01()) / static_cast<double>(strata);
          fp = (static_cast<double>(sp) + rng.uniform01()) / static_cast<double>(strata);
        } else {
          fx = rng.uniform01();
          fp = rng.uniform01();
        }
        PhasePoint s0{x0 + fx * wx, (p0 + fp * wp) / tau};
        const PhasePoint s1 = noisy ? step_thermal(s0, params, rng)
                                    : step_deterministic(s0, params);
        const int dest = grid.locate(s1.x, tau * s1.n);
        if (dest < 0) {
          ++leaked;
          continue;
        }
        if (counts[dest]++ == 0) touched.push_back(dest);
      }
      column_leak[j] = static_cast<double>(leaked) / static_cast<double>(n_tr);
      const double kept = static_cast<double>(n_tr - leaked);
      std::sort(touched.begin(), touched.end());
      for (int dest : touched) {
        if (kept > 0.0) {
          triplets[t].emplace_back(dest, j, static_cast<double>(counts[dest]) / kept);
        }
        counts[dest] = 0;
      }
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

  double global_leak = 0.0;
  for (double l : column_leak) global_leak += l;
  global_leak /= static_cast<double>(cells);
  if (global_leak > leak_tolerance) {
    throw LeakError("build_ulam_matrix: momentum window too small", global_leak);
  }

  std::vector<Eigen::Triplet<double>> all;
  std::size_t total = 0;
  for (const auto& tl : triplets) total += tl.size();
  all.reserve(total);
  for (auto& tl : triplets) all.insert(all.end(), tl.begin(), tl.end());

  TransferMatrix tm;
  tm.grid = grid;
  tm.n_tr = n_tr;
  tm.column_leak = std::move(column_leak);
  tm.global_leak = global_leak;
  tm.s.resize(cells, cells);
  tm.s.setFromTriplets(all.begin(), all.end());
  tm.s.makeCompressed();
  return tm;
}

/// Same builder, but doubles the momentum window and retries on LeakError.
inline TransferMatrix build_ulam_matrix_autowiden(
    UlamGrid grid, const Params& params, std::uint64_t n_tr, bool noisy,
    std::uint64_t seed, double leak_tolerance = kDefaultLeakTolerance,
    unsigned n_threads = 0, int max_widenings = 4) {
  for (int attempt = 0;; ++attempt) {
    try {
      return build_ulam_matrix(grid, params, n_tr, noisy, seed,
                               leak_tolerance, n_threads);
    } catch (const LeakError&) {
      if (attempt >= max_widenings) throw;
      const double c = 0.5 * (grid.p_min + grid.p_max);
      const double half = (grid.p_max - grid.p_min);
      grid = build_grid(grid.m, c - half, c + half);
    }
  }
}

/// J = <p> of an invariant (or any normalized nonnegative) cell vector.
inline double pf_current(const Eigen::VectorXd& invariant_vector,
                         const UlamGrid& grid) {
  if (invariant_vector.size() != grid.cell_count()) {
    throw DomainError("pf_current: vector size does not match grid");
  }
  if (invariant_vector.minCoeff() < -1e-10) {
    throw DomainError("pf_current: vector has negative entries");
  }
  double j = 0.0;
  for (int c = 0; c < grid.cell_count(); ++c) {
    j += grid.p_center(grid.ip_of(c)) * invariant_vector(c);
  }
  return j;
}

/// Leading right eigenvector of the transfer matrix, sign-fixed, clipped
/// at -1e-10 and normalized to sum 1.
inline Eigen::VectorXd invariant_density(const TransferMatrix& tm,
                                         double tol = 1e-10,
                                         std::uint64_t seed = 1) {
  const auto dim = static_cast<Eigen::Index>(tm.grid.cell_count());
  LinearAction apply = [&tm](const VectorC& in, VectorC& out) {
    out = tm.s * in;
  };
  ArnoldiOptions opts;
  opts.tol = tol;
  opts.seed = seed;
  Spectrum spec = arnoldi_topk(apply, dim, 1, opts);
  VectorC lead = spec.eigenvectors.front();
  // Rotate the global phase so the dominant component is real positive.
  Eigen::Index imax = 0;
  lead.cwiseAbs().maxCoeff(&imax);
  lead *= std::abs(lead(imax)) / lead(imax);
  Eigen::VectorXd density = lead.real();
  for (Eigen::Index i = 0; i < density.size(); ++i) {
    if (density(i) < 0.0) {
      if (density(i) < -1e-6) {
        throw ConvergenceError(
            "invariant_density: eigenvector has significant negative part", 1);
      }
      density(i) = 0.0;
    }
  }
  return density / density.sum();
}

}  // namespace dkr

#endif  // DKR_ULAM_HPP
