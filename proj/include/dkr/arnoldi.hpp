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

#ifndef DKR_ARNOLDI_HPP
#define DKR_ARNOLDI_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "dkr/errors.hpp"
#include "dkr/params.hpp"

namespace dkr {

using Complex = std::complex<double>;
using VectorC = Eigen::VectorXcd;
using MatrixC = Eigen::MatrixXcd;

/// y = A x for a linear operator given only through its action.
using LinearAction = std::function<void(const VectorC& in, VectorC& out)>;

struct Spectrum {
  std::vector<Complex> eigenvalues;   // sorted by descending modulus
  std::vector<VectorC> eigenvectors;  // empty unless requested
  std::vector<double> residuals;      // ||A v - lambda v|| / ||v|| per pair

  std::size_t size() const { return eigenvalues.size(); }
};

inline constexpr std::size_t kDenseSolveGuard = 4096;

namespace detail {

inline void sort_spectrum(Spectrum& s) {
  std::vector<std::size_t> order(s.eigenvalues.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::abs(s.eigenvalues[a]) >
                            std::abs(s.eigenvalues[b]);
                   });
  Spectrum out;
  out.eigenvalues.reserve(order.size());
  out.residuals.reserve(order.size());
  for (std::size_t i : order) {
    out.eigenvalues.push_back(s.eigenvalues[i]);
    out.residuals.push_back(s.residuals[i]);
    if (!s.eigenvectors.empty()) {
      out.eigenvectors.push_back(std::move(s.eigenvectors[i]));
    }
  }
  s = std::move(out);
}

// Swaps the diagonal entries T(i,i) and T(i+1,i+1) of a complex Schur form
// by a unitary similarity, updating Q accordingly.
inline void swap_schur_entries(MatrixC& T, MatrixC& Q, Eigen::Index i) {
  const Complex t11 = T(i, i);
  const Complex t12 = T(i, i + 1);
  const Complex t22 = T(i + 1, i + 1);
  if (t11 == t22) return;  // equal values, ordering indifferent
  // Eigenvector of the 2x2 block for t22; rotate it onto e1.
  const Complex v1 = t12;
  const Complex v2 = t22 - t11;
  const double r = std::sqrt(std::norm(v1) + std::norm(v2));
  MatrixC G(2, 2);
  G(0, 0) = v1 / r;
  G(1, 0) = v2 / r;
  G(0, 1) = -std::conj(v2) / r;
  G(1, 1) = std::conj(v1) / r;
  T.block(0, i, i + 2, 2) = (T.block(0, i, i + 2, 2) * G).eval();
  T.block(i, i, 2, T.cols() - i) =
      (G.adjoint() * T.block(i, i, 2, T.cols() - i)).eval();
  Q.middleCols(i, 2) = (Q.middleCols(i, 2) * G).eval();
  T(i + 1, i) = Complex(0.0, 0.0);
}

// Reorders a complex Schur form so the diagonal is sorted by descending
// modulus, via adjacent swaps.
inline void sort_schur_descending(MatrixC& T, MatrixC& Q) {
  const Eigen::Index m = T.rows();
  for (Eigen::Index target = 0; target < m; ++target) {
    Eigen::Index best = target;
    for (Eigen::Index j = target + 1; j < m; ++j) {
      if (std::abs(T(j, j)) > std::abs(T(best, best))) best = j;
    }
    for (Eigen::Index j = best; j > target; --j) {
      swap_schur_entries(T, Q, j - 1);
    }
  }
}

// Eigenvector of an upper-triangular T for the eigenvalue at diagonal
// position i, by back substitution; unit norm.
inline VectorC triangular_eigenvector(const MatrixC& T, Eigen::Index i) {
  const Eigen::Index m = T.rows();
  const Complex lambda = T(i, i);
  const double scale = std::max(T.cwiseAbs().maxCoeff(), 1.0);
  VectorC y = VectorC::Zero(m);
  y(i) = Complex(1.0, 0.0);
  for (Eigen::Index j = i - 1; j >= 0; --j) {
    Complex acc(0.0, 0.0);
    for (Eigen::Index l = j + 1; l <= i; ++l) acc += T(j, l) * y(l);
    Complex denom = T(j, j) - lambda;
    if (std::abs(denom) < 1e-14 * scale) {
      denom = Complex(1e-14 * scale, 0.0);
    }
    y(j) = -acc / denom;
  }
  return y / y.norm();
}

}  // namespace detail

/// Full spectrum of a dense matrix (oracle path). Guarded to small sizes
/// since cost is cubic.
inline Spectrum dense_spectrum(const MatrixC& matrix,
                               bool want_vectors = true) {
  if (matrix.rows() != matrix.cols()) {
    throw DomainError("dense_spectrum: matrix must be square");
  }
  if (static_cast<std::size_t>(matrix.rows()) > kDenseSolveGuard) {
    throw SizeError("dense_spectrum: dimension exceeds guard");
  }
  Eigen::ComplexEigenSolver<MatrixC> solver(matrix, true);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("dense_spectrum: eigensolver failed", 0);
  }
  Spectrum s;
  const Eigen::Index n = matrix.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex lambda = solver.eigenvalues()(i);
    const VectorC v = solver.eigenvectors().col(i);
    s.eigenvalues.push_back(lambda);
    s.residuals.push_back((matrix * v - lambda * v).norm() / v.norm());
    if (want_vectors) s.eigenvectors.push_back(v);
  }
  detail::sort_spectrum(s);
  return s;
}

inline Spectrum dense_spectrum(const Eigen::MatrixXd& matrix,
                               bool want_vectors = true) {
  return dense_spectrum(MatrixC(matrix.cast<Complex>()), want_vectors);
}

struct ArnoldiOptions {
  double tol = 1e-8;
  int max_restarts = 60;
  std::uint64_t seed = 1;
  int krylov_dim = 0;  // 0 means max(2 k + 10, 20), capped at dim
  bool want_vectors = true;
};

/// Largest-modulus eigenpairs of a matrix-free linear operator, via
/// Arnoldi iteration with thick (Krylov-Schur) restarts.
///
/// Invariant maintained throughout:  A V_s = V_s G_s + beta v_s e_s^T,
/// where after a restart G carries the retained Schur block plus its
/// coupling row, and during expansion plain Arnoldi columns. The start
/// vector is deterministic (all-ones perturbed by the seeded stream), so
/// converged pairs are reproducible run to run.
inline Spectrum arnoldi_topk(const LinearAction& apply, Eigen::Index dim,
                             int k_eigs, const ArnoldiOptions& opts = {}) {
  if (k_eigs < 1 || dim < k_eigs) {
    throw DomainError("arnoldi_topk: need dim >= k_eigs >= 1");
  }
  int m = opts.krylov_dim > 0 ? opts.krylov_dim
                              : std::max(2 * k_eigs + 10, 20);
  m = std::max(m, k_eigs + 2);
  m = static_cast<int>(std::min<Eigen::Index>(m, dim));

  SmallRng rng(derive_seed({opts.seed, 0, 0}));
  constexpr double kBreakdownTol = 1e-13;

  MatrixC V(dim, m + 1);
  MatrixC G = MatrixC::Zero(m, m);
  double beta = 0.0;  // coupling of the trailing basis vector V.col(s)

  {
    VectorC v0(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      v0(i) = Complex(1.0 + 1e-3 * (rng.uniform01() - 0.5),
                      1e-3 * (rng.uniform01() - 0.5));
    }
    V.col(0) = v0 / v0.norm();
  }

  auto random_orthogonal_vector = [&](int basis_size) {
    VectorC w(dim);
    for (int attempt = 0; attempt < 50; ++attempt) {
      for (Eigen::Index i = 0; i < dim; ++i) {
        w(i) = Complex(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
      }
      w -= V.leftCols(basis_size) * (V.leftCols(basis_size).adjoint() * w);
      const double norm = w.norm();
      if (norm > 1e-8) return VectorC(w / norm);
    }
    throw ConvergenceError("arnoldi_topk: cannot extend basis", 0);
  };

  int p = 0;  // retained block size (0 before the first restart)
  int converged_total = 0;

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    // Expand plain Arnoldi columns from p to m.
    int msz = m;
    bool exhausted = false;
    for (int j = p; j < m; ++j) {
      VectorC w(dim);
      apply(V.col(j), w);
      // Modified Gram-Schmidt with one reorthogonalization pass.
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const Complex h = V.col(i).dot(w);
          w -= h * V.col(i);
          G(i, j) += h;
        }
      }
      beta = w.norm();
      if (beta < kBreakdownTol) {
        beta = 0.0;
        if (static_cast<Eigen::Index>(j) + 1 >= dim) {
          msz = j + 1;
          exhausted = true;
          break;
        }
        V.col(j + 1) = random_orthogonal_vector(j + 1);
      } else {
        V.col(j + 1) = w / beta;
      }
      if (j + 1 < m) G(j + 1, j) = beta;
    }

    // Schur form of the projected operator, sorted by descending modulus.
    MatrixC T = G.topLeftCorner(msz, msz);
    Eigen::ComplexSchur<MatrixC> schur(T, true);
    if (schur.info() != Eigen::Success) {
      throw ConvergenceError("arnoldi_topk: Schur decomposition failed",
                             converged_total);
    }
    T = schur.matrixT();
    MatrixC Q = schur.matrixU();
    detail::sort_schur_descending(T, Q);

    // Ritz residuals: |beta * (last row of Q) y_i| for triangular
    // eigenvectors y_i; exact for the factorization, so no extra applies.
    std::vector<double> ritz_res(msz);
    std::vector<VectorC> ritz_y(msz);
    converged_total = 0;
    const int wanted = std::min(k_eigs, msz);
    for (int i = 0; i < msz; ++i) {
      VectorC ty = detail::triangular_eigenvector(T, i);
      ritz_res[i] =
          exhausted ? 0.0 : beta * std::abs((Q.row(msz - 1) * ty)(0, 0));
      ritz_y[i] = Q * ty;
      const double scale = std::max(1.0, std::abs(T(i, i)));
      if (i < wanted && ritz_res[i] <= opts.tol * scale) ++converged_total;
    }

    if (converged_total >= wanted || exhausted) {
      if (exhausted && msz < k_eigs) {
        throw ConvergenceError("arnoldi_topk: operator rank too small", msz);
      }
      Spectrum out;
      for (int i = 0; i < wanted; ++i) {
        out.eigenvalues.push_back(T(i, i));
        out.residuals.push_back(ritz_res[i]);
        if (opts.want_vectors) {
          VectorC x = V.leftCols(msz) * ritz_y[i];
          out.eigenvectors.push_back(x / x.norm());
        }
      }
      return out;
    }
    if (restart == opts.max_restarts) break;

    // Thick restart: keep the leading block in Schur form plus the
    // residual direction, fold the coupling row into G.
    p = std::min(msz - 1, k_eigs + std::max(4, k_eigs / 2));
    MatrixC Vp = V.leftCols(msz) * Q.leftCols(p);
    V.leftCols(p) = Vp;
    V.col(p) = V.col(msz);
    Eigen::RowVectorXcd coupling = beta * Q.row(msz - 1).head(p);
    G.setZero();
    G.topLeftCorner(p, p) = T.topLeftCorner(p, p);
    G.row(p).head(p) = coupling;
  }
  throw ConvergenceError("arnoldi_topk: restarts exhausted", converged_total);
}

/// Convenience: keep increasing k until every eigenvalue with modulus
/// >= r_min is captured (the smallest converged modulus drops below it).
inline Spectrum arnoldi_above_modulus(const LinearAction& apply,
                                      Eigen::Index dim, double r_min,
                                      int k_start = 50,
                                      const ArnoldiOptions& opts = {}) {
  int k = static_cast<int>(std::min<Eigen::Index>(k_start, dim));
  for (;;) {
    Spectrum s = arnoldi_topk(apply, dim, k, opts);
    if (std::abs(s.eigenvalues.back()) < r_min ||
        static_cast<Eigen::Index>(k) >= dim) {
      return s;
    }
    k = static_cast<int>(std::min<Eigen::Index>(2 * k, dim));
  }
}

}  // namespace dkr

#endif  // DKR_ARNOLDI_HPP
