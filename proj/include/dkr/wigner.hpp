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

#ifndef DKR_WIGNER_HPP
#define DKR_WIGNER_HPP

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "dkr/errors.hpp"
#include "dkr/lindblad.hpp"
#include "dkr/params.hpp"
#include "dkr/ulam.hpp"

namespace dkr {

/// Discrete phase-space distribution. Redundant fields live on the
/// 2N x 2N semi-integer grid produced by the Weyl-Wigner symbol; physical
/// fields live on the N x N subgrid after ghost removal, with rows ordered
/// by ascending momentum n = r - N/2 (p = tau n) and columns by position
/// x = 2 pi c / N. Physical fields are normalized so the grid sum equals
/// the trace of the source operator.
struct PhaseField {
  Eigen::MatrixXcd values;
  bool physical = false;
  int n_dim = 0;   // Hilbert-space dimension N
  double tau = 0;  // momentum scale for the p axis

  double x_coord(int c) const { return kTwoPi * c / n_dim; }
  double p_coord(int r) const { return tau * (r - n_dim / 2); }
};

namespace detail {

// Momentum-to-position transform matrix F(j,i) = exp(i n_i x_j)/sqrt(N).
inline MatrixC position_transform(int n) {
  MatrixC f(n, n);
  for (int j = 0; j < n; ++j) {
    const double xj = kTwoPi * j / n;
    for (int i = 0; i < n; ++i) {
      const double phase = (i - n / 2) * xj;
      f(j, i) = Complex(std::cos(phase), std::sin(phase)) /
                std::sqrt(static_cast<double>(n));
    }
  }
  return f;
}

// One-dimensional transform kernel E(k, j) = exp(sign * i pi k j / N)
// on the 2N-point redundant grid.
inline MatrixC chord_kernel(int n, double sign) {
  const int two_n = 2 * n;
  MatrixC e(two_n, two_n);
  for (int k = 0; k < two_n; ++k) {
    for (int j = 0; j < two_n; ++j) {
      const double phase = sign * kPi * k * j / n;
      e(k, j) = Complex(std::cos(phase), std::sin(phase));
    }
  }
  return e;
}

// Centered chord frequency for index k on the 2N grid: value in [-N, N).
inline int centered_freq(int k, int n) { return k < n ? k : k - 2 * n; }

}  // namespace detail

/// Weyl-Wigner symbol of an N x N momentum-basis operator on the
/// redundant 2N x 2N grid:
///   W(a,b) = sum_n <q_{2b-n}| R |q_n> exp(i 2 pi 2 a (b - n) / N),
/// with the position index 2b - n reduced mod N. Row index A = 2a, column
/// index B = 2b with a, b semi-integer.
inline PhaseField weyl_wigner_symbol(const DensityMatrix& op,
                                     const Params& params) {
  if (op.rows() != op.cols() || op.rows() < 2) {
    throw DomainError("weyl_wigner_symbol: need a square operator");
  }
  const int n = static_cast<int>(op.rows());
  const MatrixC f = detail::position_transform(n);
  const MatrixC pos = f * op * f.adjoint();

  PhaseField field;
  field.physical = false;
  field.n_dim = n;
  field.tau = params.tau();
  field.values.resize(2 * n, 2 * n);
  for (int big_a = 0; big_a < 2 * n; ++big_a) {
    for (int big_b = 0; big_b < 2 * n; ++big_b) {
      Complex acc(0.0, 0.0);
      for (int m = 0; m < n; ++m) {
        const int row = ((big_b - m) % n + n) % n;
        // phase = (pi/N) (A B - 2 A m)
        const double phase =
            kPi / n * (static_cast<double>(big_a) * big_b - 2.0 * big_a * m);
        acc += pos(row, m) * Complex(std::cos(phase), std::sin(phase));
      }
      field.values(big_a, big_b) = acc;
    }
  }
  return field;
}

/// Chord-space half-range projection on the redundant grid: transforms to
/// the chord (conjugate) representation, zeroes every component whose
/// centered frequency falls outside [-N/2, N/2) on either axis, and
/// transforms back. A diagonal 0/1 projection, hence exactly idempotent.
inline PhaseField chord_filter(const PhaseField& field) {
  if (field.physical) {
    throw GeometryError("chord_filter: expects a redundant 2N x 2N field");
  }
  const int n = field.n_dim;
  const MatrixC fwd = detail::chord_kernel(n, -1.0);
  const MatrixC bwd = detail::chord_kernel(n, +1.0);
  MatrixC chords = fwd * field.values * fwd.transpose();
  for (int ka = 0; ka < 2 * n; ++ka) {
    const int fa = detail::centered_freq(ka, n);
    for (int kb = 0; kb < 2 * n; ++kb) {
      const int fb = detail::centered_freq(kb, n);
      if (fa < -n / 2 || fa >= n / 2 || fb < -n / 2 || fb >= n / 2) {
        chords(ka, kb) = Complex(0.0, 0.0);
      }
    }
  }
  PhaseField out = field;
  out.values = (bwd * chords * bwd.transpose()) /
               (4.0 * static_cast<double>(n) * n);
  return out;
}

/// Ghost removal: keep one copy of every chord class (the fundamental
/// half-range) and rebuild the symbol on the N x N physical subgrid.
/// Rows are reordered to ascending momentum and the field is scaled so
/// its grid sum equals the trace of the source operator.
///
/// For Hermitian sources (real redundant symbol) the result is
/// symmetrized over the two half-open Nyquist-domain choices, which makes
/// it exactly real; complex symbols of non-Hermitian operators pass
/// through untouched.
inline PhaseField remove_ghosts(const PhaseField& field) {
  if (field.physical) {
    throw GeometryError("remove_ghosts: expects a redundant 2N x 2N field");
  }
  const int n = field.n_dim;
  const MatrixC fwd = detail::chord_kernel(n, -1.0);
  const MatrixC chords = fwd * field.values * fwd.transpose();

  // Gather the fundamental domain into an N x N block, frequencies
  // fa, fb in [-N/2, N/2).
  MatrixC fund(n, n);
  for (int ia = 0; ia < n; ++ia) {
    const int fa = ia - n / 2;
    const int ka = (fa + 2 * n) % (2 * n);
    for (int ib = 0; ib < n; ++ib) {
      const int fb = ib - n / 2;
      const int kb = (fb + 2 * n) % (2 * n);
      fund(ia, ib) = chords(ka, kb);
    }
  }

  // Reconstruct on the even subgrid (A, B) = (2a, 2b):
  //   W(a,b) = (1/(2N)^2) sum fund(fa,fb) exp(i 2 pi (fa a + fb b) / N).
  MatrixC g(n, n);
  for (int a = 0; a < n; ++a) {
    for (int ia = 0; ia < n; ++ia) {
      const double phase = kTwoPi * a * (ia - n / 2) / n;
      g(a, ia) = Complex(std::cos(phase), std::sin(phase));
    }
  }
  MatrixC phys = (g * fund * g.transpose()) /
                 (4.0 * static_cast<double>(n) * n);

  PhaseField out;
  out.physical = true;
  out.n_dim = n;
  out.tau = field.tau;
  out.values.resize(n, n);
  // Row a of the decimated grid carries momentum n = -a (mod N); reorder
  // to ascending n and normalize so the grid sum equals the trace.
  for (int a = 0; a < n; ++a) {
    const int nval = ((-a + n / 2) % n + n) % n - n / 2;  // in [-N/2, N/2)
    out.values.row(nval + n / 2) = phys.row(a);
  }
  out.values *= 2.0 / static_cast<double>(n);
  const double scale = field.values.cwiseAbs().maxCoeff();
  if (field.values.imag().cwiseAbs().maxCoeff() <= 1e-9 * std::max(scale, 1.0)) {
    out.values = out.values.real().cast<Complex>();
  }
  return out;
}

/// Classical invariant density interpolated onto the Wigner physical
/// grid: bilinear in (x, p), periodic in x, renormalized to sum 1.
inline PhaseField resample_classical(const Eigen::VectorXd& invariant_vector,
                                     const UlamGrid& grid,
                                     const Params& params, int target_n) {
  if (invariant_vector.size() != grid.cell_count()) {
    throw DomainError("resample_classical: vector size mismatch");
  }
  const double tau = params.tau();
  const double wigner_p_lo = tau * (-target_n / 2);
  const double wigner_p_hi = tau * (target_n / 2 - 1);
  if (wigner_p_lo < grid.p_min || wigner_p_hi > grid.p_max) {
    throw GeometryError(
        "resample_classical: Ulam window does not cover the Wigner p-range");
  }

  PhaseField out;
  out.physical = true;
  out.n_dim = target_n;
  out.tau = tau;
  out.values.resize(target_n, target_n);

  const int m = grid.m;
  auto cell_mass = [&](int ix, int ip) {
    ix = ((ix % m) + m) % m;                  // periodic in x
    ip = std::clamp(ip, 0, m - 1);            // clamped in p
    return invariant_vector(grid.cell_index(ix, ip));
  };

  for (int r = 0; r < target_n; ++r) {
    const double p = out.p_coord(r);
    const double fp = (p - grid.p_min) / grid.p_width() - 0.5;
    const int ip0 = static_cast<int>(std::floor(fp));
    const double tp = fp - ip0;
    for (int c = 0; c < target_n; ++c) {
      const double x = out.x_coord(c);
      const double fx = x / grid.x_width() - 0.5;
      const int ix0 = static_cast<int>(std::floor(fx));
      const double tx = fx - ix0;
      const double v =
          (1 - tx) * (1 - tp) * cell_mass(ix0, ip0) +
          tx * (1 - tp) * cell_mass(ix0 + 1, ip0) +
          (1 - tx) * tp * cell_mass(ix0, ip0 + 1) +
          tx * tp * cell_mass(ix0 + 1, ip0 + 1);
      out.values(r, c) = Complex(v, 0.0);
    }
  }
  const double total = out.values.real().sum();
  if (total > 0.0) out.values /= total;
  return out;
}

/// Normalized overlap O = sum R1 R2* / sqrt(sum |R1|^2 sum |R2|^2);
/// complex in general, |O| <= 1, modulus invariant under global phases.
inline Complex overlap(const PhaseField& r1, const PhaseField& r2) {
  if (r1.values.rows() != r2.values.rows() ||
      r1.values.cols() != r2.values.cols() || r1.physical != r2.physical ||
      r1.n_dim != r2.n_dim) {
    throw GeometryError("overlap: mismatched field grids");
  }
  const Complex num = (r1.values.array() * r2.values.array().conjugate()).sum();
  const double d1 = r1.values.squaredNorm();
  const double d2 = r2.values.squaredNorm();
  if (d1 == 0.0 || d2 == 0.0) {
    throw DomainError("overlap: zero field");
  }
  return num / std::sqrt(d1 * d2);
}

/// Fraction of |field| mass carried by negative values; 0 for any
/// nonnegative field, strictly positive in the presence of interference
/// fringes.
inline double negativity_fraction(const PhaseField& field) {
  if (!field.physical) {
    throw GeometryError("negativity_fraction: expects a physical field");
  }
  double neg = 0.0;
  double total = 0.0;
  for (int r = 0; r < field.values.rows(); ++r) {
    for (int c = 0; c < field.values.cols(); ++c) {
      const double v = field.values(r, c).real();
      total += std::abs(v);
      if (v < 0.0) neg += -v;
    }
  }
  return total > 0.0 ? neg / total : 0.0;
}

/// Momentum marginal of a physical field: sums over position, returning
/// one value per momentum row (matches rho_nn for quantum sources).
inline Eigen::VectorXd momentum_marginal(const PhaseField& field) {
  if (!field.physical) {
    throw GeometryError("momentum_marginal: expects a physical field");
  }
  return field.values.real().rowwise().sum();
}

}  // namespace dkr

#endif  // DKR_WIGNER_HPP
