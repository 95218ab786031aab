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

#ifndef DKR_LINDBLAD_HPP
#define DKR_LINDBLAD_HPP

#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

#include "dkr/arnoldi.hpp"
#include "dkr/classical.hpp"
#include "dkr/errors.hpp"
#include "dkr/params.hpp"

namespace dkr {

/// Momentum-basis Hilbert space: integer momenta n in {-N/2, ..., N/2-1}.
struct HilbertSpec {
  int n_dim = 0;

  explicit HilbertSpec(int n) : n_dim(n) {
    if (n < 8 || n % 2 != 0) {
      throw DomainError("HilbertSpec: N must be even and >= 8");
    }
  }

  int n_value(int i) const { return i - n_dim / 2; }
  int index_of(int n) const { return n + n_dim / 2; }

  /// Largest |p| representable; the classical window should fit inside.
  double p_reach(const Params& params) const {
    return params.tau() * (n_dim / 2);
  }
};

using DensityMatrix = Eigen::MatrixXcd;

/// Hermiticity / trace / (optionally) positivity diagnostics of a state.
struct StateDiagnostics {
  double hermiticity_defect = 0.0;  // max |rho - rho^dag|
  double trace_defect = 0.0;        // |Tr rho - 1|
  double min_eigenvalue = 0.0;      // only when requested
};

inline StateDiagnostics diagnose_state(const DensityMatrix& rho,
                                       bool check_positivity = false) {
  StateDiagnostics d;
  d.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  d.trace_defect = std::abs(rho.trace() - Complex(1.0, 0.0));
  if (check_positivity) {
    Eigen::SelfAdjointEigenSolver<MatrixC> es(
        MatrixC(0.5 * (rho + rho.adjoint())), Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
  }
  return d;
}

inline void validate_state(const DensityMatrix& rho) {
  const StateDiagnostics d = diagnose_state(rho);
  if (d.hermiticity_defect > 1e-10) {
    throw DomainError("density matrix not Hermitian within 1e-10");
  }
  if (d.trace_defect > 1e-10) {
    throw DomainError("density matrix trace differs from 1 beyond 1e-10");
  }
}

/// Matrix-free one-period channel rho_{t+1} = E(rho_t), factorized as
/// damping segment -> delta kick -> free rotation so its Ehrenfest limit
/// is exactly the classical map: the segment takes <n> to gamma <n>, the
/// kick adds (k/hbar) f(x), and the rotation drifts x by tau <n> with the
/// fully kicked momentum.
///
/// In the momentum basis the damping segment is elementwise:
///   d rho(n,m)/dt = -g^2 (|n|+|m|)/2 rho(n,m)
///                   + g^2 sqrt(n+1) sqrt(m+1) rho(n+1,m+1)   (n,m >= 0)
///                   + g^2 sqrt(|n|+1) sqrt(|m|+1) rho(n-1,m-1) (n,m <= 0)
/// over one unit of dimensionless time with g^2 = -ln gamma; the free
/// rotation exp(-i tau n^2 / 2) is applied exactly as diagonal phases.
class ChannelApplier {
 public:
  static constexpr int kDefaultSubsteps = 200;
  static constexpr double kGrowthGuard = 1e6;

  /// Smallest substep count that keeps explicit RK4 stable: the stiffest
  /// decay runs at g^2 N / 2 per unit time, and the RK4 stability
  /// boundary on the negative real axis is ~2.8/dt (kept with margin 2).
  static int stable_substeps(const Params& params, const HilbertSpec& spec) {
    if (params.gamma() <= 0.0) return kDefaultSubsteps;
    const double rate = -std::log(params.gamma()) * spec.n_dim / 2.0;
    const int needed = static_cast<int>(std::ceil(rate / 2.0));
    return std::max(kDefaultSubsteps, needed);
  }

  /// substeps = 0 selects the stability-scaled default.
  ChannelApplier(const Params& params, const HilbertSpec& spec,
                 int substeps = 0)
      : params_(params), spec_(spec),
        substeps_(substeps == 0 ? stable_substeps(params, spec) : substeps) {
    if (substeps < 0) throw DomainError("ChannelApplier: substeps >= 0");
    if (params.gamma() <= 0.0) {
      throw DomainError("ChannelApplier: quantum model needs gamma > 0");
    }
    const int n = spec.n_dim;
    const double tau = params.tau();
    const double g2 = -std::log(params.gamma());

    // Momentum-to-position transform: F(j,i) = exp(i n_i x_j)/sqrt(N).
    fourier_.resize(n, n);
    for (int j = 0; j < n; ++j) {
      const double xj = kTwoPi * j / n;
      for (int i = 0; i < n; ++i) {
        const double phase = spec.n_value(i) * xj;
        fourier_(j, i) = Complex(std::cos(phase), std::sin(phase)) /
                         std::sqrt(static_cast<double>(n));
      }
    }

    // Kick phases on the position grid.
    kick_phase_.resize(n);
    for (int j = 0; j < n; ++j) {
      const double xj = kTwoPi * j / n;
      const double v = params.kick_n() * (std::cos(xj) + 0.5 * params.a() *
                                          std::cos(2.0 * xj + params.phi()));
      kick_phase_(j) = Complex(std::cos(v), -std::sin(v));
    }

    // Elementwise decay coefficients of the damping segment, and the exact
    // free-rotation phases exp(-i tau n^2 / 2).
    coeff_.resize(n, n);
    rotation_.resize(n);
    for (int i = 0; i < n; ++i) {
      const double ni = spec.n_value(i);
      const double angle = -0.5 * tau * ni * ni;
      rotation_(i) = Complex(std::cos(angle), std::sin(angle));
      for (int l = 0; l < n; ++l) {
        const double nl = spec.n_value(l);
        coeff_(i, l) = -0.5 * g2 * (std::abs(ni) + std::abs(nl));
      }
    }

    // Jump amplitudes; zero outside each lowering operator's sector.
    Eigen::VectorXd sq_pos = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sq_neg = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      const int ni = spec.n_value(i);
      if (ni >= 0 && i + 1 < n) sq_pos(i) = std::sqrt(ni + 1.0);
      if (ni <= 0 && i - 1 >= 0) sq_neg(i) = std::sqrt(-ni + 1.0);
    }
    jump_pos_ = g2 * (sq_pos.head(n - 1) * sq_pos.head(n - 1).transpose());
    jump_neg_ = g2 * (sq_neg.tail(n - 1) * sq_neg.tail(n - 1).transpose());
  }

  const Params& params() const { return params_; }
  const HilbertSpec& spec() const { return spec_; }
  int substeps() const { return substeps_; }

  /// rho -> U_k rho U_k^dag with the diagonal kick phase in position space.
  DensityMatrix kick_apply(const DensityMatrix& rho) const {
    DensityMatrix pos = fourier_ * rho * fourier_.adjoint();
    pos = kick_phase_.asDiagonal() * pos * kick_phase_.conjugate().asDiagonal();
    return fourier_.adjoint() * pos * fourier_;
  }

  /// rho -> R rho R^dag with R = exp(-i tau n^2 / 2); exact.
  DensityMatrix free_rotation(const DensityMatrix& rho) const {
    return rotation_.asDiagonal() * rho * rotation_.conjugate().asDiagonal();
  }

  /// Damping segment over one unit of time, fixed-step RK4. The generator
  /// is dissipative (spectrum on the negative real axis), so any norm
  /// growth beyond the guard marks an unstable step size.
  DensityMatrix dissipative_segment(const DensityMatrix& rho) const {
    const int n = spec_.n_dim;
    const double dt = 1.0 / substeps_;
    DensityMatrix y = rho;
    DensityMatrix k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n);
    const double norm0 = rho.norm();
    for (int step = 0; step < substeps_; ++step) {
      rhs(y, k1);
      tmp = y + (0.5 * dt) * k1;
      rhs(tmp, k2);
      tmp = y + (0.5 * dt) * k2;
      rhs(tmp, k3);
      tmp = y + dt * k3;
      rhs(tmp, k4);
      y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double growth = y.norm();
    if (!(growth <= kGrowthGuard * std::max(1.0, norm0))) {
      throw IntegrationError(
          "dissipative_segment: norm growth marks RK4 instability; "
          "increase substeps",
          growth);
    }
    return y;
  }

  /// One full period: damping of the pre-kick momentum over one unit of
  /// time, then the delta kick, then the exact free rotation (so the
  /// position drift carries the fully kicked momentum).
  DensityMatrix period_map(const DensityMatrix& rho) const {
    return free_rotation(kick_apply(dissipative_segment(rho)));
  }

  /// Channel action on a vectorized (column-major) N x N matrix; used by
  /// the matrix-free Arnoldi paths.
  void apply_vectorized(const VectorC& in, VectorC& out) const {
    const int n = spec_.n_dim;
    Eigen::Map<const DensityMatrix> rho(in.data(), n, n);
    const DensityMatrix result = period_map(rho);
    out.resize(static_cast<Eigen::Index>(n) * n);
    Eigen::Map<DensityMatrix>(out.data(), n, n) = result;
  }

 private:
  void rhs(const DensityMatrix& rho, DensityMatrix& out) const {
    const int n = spec_.n_dim;
    out.noalias() = coeff_.cwiseProduct(rho);
    out.topLeftCorner(n - 1, n - 1) +=
        jump_pos_.cwiseProduct(rho.bottomRightCorner(n - 1, n - 1));
    out.bottomRightCorner(n - 1, n - 1) +=
        jump_neg_.cwiseProduct(rho.topLeftCorner(n - 1, n - 1));
  }

  Params params_;
  HilbertSpec spec_;
  int substeps_;
  MatrixC fourier_;
  VectorC kick_phase_;
  VectorC rotation_;
  MatrixC coeff_;
  Eigen::MatrixXd jump_pos_;
  Eigen::MatrixXd jump_neg_;
};

/// J = tau Tr(rho n_hat); real up to Hermiticity defects.
inline double quantum_current(const DensityMatrix& rho, const Params& params,
                              const HilbertSpec& spec) {
  Complex acc(0.0, 0.0);
  for (int i = 0; i < spec.n_dim; ++i) {
    acc += rho(i, i) * static_cast<double>(spec.n_value(i));
  }
  return params.tau() * acc.real();
}

/// P(p = tau n) = rho_nn as a histogram over unit-n bins.
inline MomentumHistogram momentum_distribution(const DensityMatrix& rho,
                                               const Params& params,
                                               const HilbertSpec& spec) {
  MomentumHistogram h;
  const double tau = params.tau();
  h.p_edges.resize(spec.n_dim + 1);
  h.mass.resize(spec.n_dim);
  double total = 0.0;
  for (int i = 0; i < spec.n_dim; ++i) {
    h.p_edges[i] = tau * (spec.n_value(i) - 0.5);
    h.mass[i] = std::max(0.0, rho(i, i).real());
    total += h.mass[i];
  }
  h.p_edges[spec.n_dim] = tau * (spec.n_value(spec.n_dim - 1) + 0.5);
  if (total > 0.0) {
    for (double& m : h.mass) m /= total;
  }
  return h;
}

/// Fixed point of the one-period channel via matrix-free Arnoldi over
/// vectorized states; Hermitized and normalized to Tr = 1.
inline DensityMatrix quantum_steady_state(const ChannelApplier& channel,
                                          double tol = 1e-10,
                                          std::uint64_t seed = 1) {
  if (channel.params().gamma() >= 1.0) {
    throw DomainError("quantum_steady_state: needs gamma < 1");
  }
  const int n = channel.spec().n_dim;
  const auto dim = static_cast<Eigen::Index>(n) * n;
  LinearAction apply = [&channel](const VectorC& in, VectorC& out) {
    channel.apply_vectorized(in, out);
  };
  ArnoldiOptions opts;
  opts.tol = tol;
  opts.seed = seed;
  Spectrum spec = arnoldi_topk(apply, dim, 2, opts);
  int near_one = 0;
  for (const Complex& lambda : spec.eigenvalues) {
    if (std::abs(lambda - Complex(1.0, 0.0)) < 1e-6) ++near_one;
  }
  if (near_one > 1) {
    throw DegeneracyError("quantum_steady_state: degenerate fixed point");
  }
  if (std::abs(spec.eigenvalues.front() - Complex(1.0, 0.0)) > 1e-8) {
    throw ConvergenceError(
        "quantum_steady_state: leading eigenvalue not 1", 0);
  }
  Eigen::Map<const DensityMatrix> raw(spec.eigenvectors.front().data(), n, n);
  DensityMatrix rho = 0.5 * (raw + raw.adjoint());
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-12) {
    throw ConvergenceError("quantum_steady_state: traceless eigenvector", 0);
  }
  rho /= tr;
  return rho;
}

/// Leading eigenvalues of the channel (matrix-free).
inline Spectrum quantum_spectrum(const ChannelApplier& channel, int k_eigs,
                                 const ArnoldiOptions& opts = {}) {
  const int n = channel.spec().n_dim;
  const auto dim = static_cast<Eigen::Index>(n) * n;
  LinearAction apply = [&channel](const VectorC& in, VectorC& out) {
    channel.apply_vectorized(in, out);
  };
  Spectrum s = arnoldi_topk(apply, dim, k_eigs, opts);
  for (const Complex& lambda : s.eigenvalues) {
    if (std::abs(lambda) > 1.0 + 1e-6) {
      throw ConvergenceError(
          "quantum_spectrum: eigenvalue above the contractivity bound", 0);
    }
  }
  return s;
}

/// Channel eigenvalues down to modulus r_min (auto-increasing k).
inline Spectrum quantum_spectrum_above(const ChannelApplier& channel,
                                       double r_min, int k_start = 50,
                                       const ArnoldiOptions& opts = {}) {
  const int n = channel.spec().n_dim;
  const auto dim = static_cast<Eigen::Index>(n) * n;
  LinearAction apply = [&channel](const VectorC& in, VectorC& out) {
    channel.apply_vectorized(in, out);
  };
  return arnoldi_above_modulus(apply, dim, r_min, k_start, opts);
}

/// Explicit N^2 x N^2 superoperator assembly (dense-oracle path only;
/// memory and time scale as N^4).
inline MatrixC assemble_superoperator(const ChannelApplier& channel) {
  const int n = channel.spec().n_dim;
  if (n > 32) {
    throw SizeError("assemble_superoperator: N > 32 would assemble > 1M^2");
  }
  const auto dim = static_cast<Eigen::Index>(n) * n;
  MatrixC super(dim, dim);
  VectorC unit = VectorC::Zero(dim);
  VectorC column(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    unit(j) = Complex(1.0, 0.0);
    channel.apply_vectorized(unit, column);
    super.col(j) = column;
    unit(j) = Complex(0.0, 0.0);
  }
  return super;
}

}  // namespace dkr

#endif  // DKR_LINDBLAD_HPP
