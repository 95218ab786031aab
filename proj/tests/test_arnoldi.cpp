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

#include <algorithm>
#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "dkr/arnoldi.hpp"

using namespace dkr;

namespace {

LinearAction action_of(const MatrixC& m) {
  return [m](const VectorC& in, VectorC& out) { out = m * in; };
}

MatrixC random_stochastic(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    double colsum = 0.0;
    for (int i = 0; i < n; ++i) {
      m(i, j) = u(gen);
      colsum += m(i, j);
    }
    m.col(j) /= colsum;
  }
  return m.cast<Complex>();
}

}  // namespace

TEST_CASE("Dense spectrum sorts by modulus and reports residuals") {
  MatrixC d = MatrixC::Zero(4, 4);
  d(0, 0) = Complex(0.2, 0.0);
  d(1, 1) = Complex(0.0, 0.9);
  d(2, 2) = Complex(-1.0, 0.0);
  d(3, 3) = Complex(0.5, 0.5);
  Spectrum s = dense_spectrum(d);
  REQUIRE(s.size() == 4);
  CHECK(std::abs(s.eigenvalues[0] - Complex(-1.0, 0.0)) < 1e-12);
  CHECK(std::abs(s.eigenvalues[1] - Complex(0.0, 0.9)) < 1e-12);
  for (double r : s.residuals) CHECK(r < 1e-12);
  const MatrixC rect = MatrixC::Zero(2, 3);
  CHECK_THROWS_AS(dense_spectrum(rect), DomainError);
}

TEST_CASE("Arnoldi matches dense on random stochastic matrices") {
  const int n = 200;
  const MatrixC m = random_stochastic(n, 31);
  Spectrum dense = dense_spectrum(m, false);
  ArnoldiOptions opts;
  opts.tol = 1e-10;
  Spectrum topk = arnoldi_topk(action_of(m), n, 10, opts);
  REQUIRE(topk.size() == 10);
  CHECK(std::abs(topk.eigenvalues[0] - Complex(1.0, 0.0)) < 1e-8);
  for (int i = 0; i < 10; ++i) {
    CHECK(std::abs(topk.eigenvalues[i] - dense.eigenvalues[i]) < 1e-8);
    CHECK(topk.residuals[i] < 1e-8);
  }
}

TEST_CASE("Arnoldi eigenvectors satisfy the eigen equation") {
  const int n = 150;
  const MatrixC m = random_stochastic(n, 77);
  Spectrum s = arnoldi_topk(action_of(m), n, 5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const VectorC& v = s.eigenvectors[i];
    CHECK((m * v - s.eigenvalues[i] * v).norm() < 1e-7);
  }
}

TEST_CASE("Complex rotation pairs are recovered") {
  // Block-diagonal with rotations: eigenvalues e^{+-i theta_j} * r_j.
  const double thetas[3] = {0.3, 1.1, 2.5};
  const double moduli[3] = {1.0, 0.8, 0.6};
  MatrixC m = MatrixC::Zero(20, 20);
  for (int b = 0; b < 3; ++b) {
    const double c = std::cos(thetas[b]), s = std::sin(thetas[b]);
    m(2 * b, 2 * b) = moduli[b] * c;
    m(2 * b, 2 * b + 1) = -moduli[b] * s;
    m(2 * b + 1, 2 * b) = moduli[b] * s;
    m(2 * b + 1, 2 * b + 1) = moduli[b] * c;
  }
  for (int i = 6; i < 20; ++i) m(i, i) = 0.05;
  Spectrum s = arnoldi_topk(action_of(m), 20, 6);
  REQUIRE(s.size() == 6);
  for (int b = 0; b < 3; ++b) {
    const Complex expect = std::polar(moduli[b], thetas[b]);
    CHECK(std::abs(s.eigenvalues[2 * b] - std::conj(expect)) *
              std::abs(s.eigenvalues[2 * b] - expect) <
          1e-16);  // one of the pair
    CHECK(std::abs(std::abs(s.eigenvalues[2 * b]) - moduli[b]) < 1e-10);
  }
}

TEST_CASE("Restarted iteration converges on a large nonnormal operator") {
  // Upper bidiagonal: graded diagonal with strong nonnormal coupling.
  const int n = 1000;
  MatrixC m = MatrixC::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = Complex(0.999 * std::pow(0.995, i), 0.0);
    if (i + 1 < n) m(i, i + 1) = Complex(0.3, 0.1);
  }
  ArnoldiOptions opts;
  opts.krylov_dim = 30;  // forces several restarts for 8 pairs
  opts.tol = 1e-9;
  Spectrum s = arnoldi_topk(action_of(m), n, 8, opts);
  for (int i = 0; i < 8; ++i) {
    // Triangular matrix: eigenvalues are the diagonal entries.
    CHECK(std::abs(s.eigenvalues[i] -
                   Complex(0.999 * std::pow(0.995, i), 0.0)) < 1e-6);
  }
}

TEST_CASE("Exact low-rank operators terminate by exhaustion") {
  MatrixC m = MatrixC::Zero(40, 40);
  m(0, 0) = 1.0;
  m(1, 1) = 0.5;
  Spectrum s = arnoldi_topk(action_of(m), 40, 2);
  CHECK(std::abs(s.eigenvalues[0] - Complex(1.0, 0.0)) < 1e-10);
  CHECK(std::abs(s.eigenvalues[1] - Complex(0.5, 0.0)) < 1e-10);
}

TEST_CASE("Identity operator returns unit eigenvalues instantly") {
  const int n = 64;
  LinearAction apply = [](const VectorC& in, VectorC& out) { out = in; };
  Spectrum s = arnoldi_topk(apply, n, 3);
  for (const Complex& z : s.eigenvalues) {
    CHECK(std::abs(z - Complex(1.0, 0.0)) < 1e-12);
  }
}

TEST_CASE("arnoldi_above_modulus grows k until the cut is passed") {
  const int n = 300;
  MatrixC m = MatrixC::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0 / (i + 1.0);
  Spectrum s = arnoldi_above_modulus(action_of(m), n, 0.09, 4);
  // Eigenvalues >= 0.09 are 1, 1/2, ..., 1/11 (11 of them).
  REQUIRE(s.size() >= 11);
  CHECK(std::abs(s.eigenvalues.back()) < 0.09 + 1e-12);
  int above = 0;
  for (const Complex& z : s.eigenvalues) {
    if (std::abs(z) >= 0.09) ++above;
  }
  CHECK(above == 11);
}

TEST_CASE("Determinism across identical invocations") {
  const MatrixC m = random_stochastic(120, 5);
  Spectrum a = arnoldi_topk(action_of(m), 120, 6);
  Spectrum b = arnoldi_topk(action_of(m), 120, 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(a.eigenvalues[i] == b.eigenvalues[i]);
  }
}

TEST_CASE("Input validation") {
  LinearAction apply = [](const VectorC& in, VectorC& out) { out = in; };
  CHECK_THROWS_AS(arnoldi_topk(apply, 10, 0), DomainError);
  CHECK_THROWS_AS(arnoldi_topk(apply, 3, 5), DomainError);
}
