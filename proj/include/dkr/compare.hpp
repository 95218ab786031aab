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

#ifndef DKR_COMPARE_HPP
#define DKR_COMPARE_HPP

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkr/arnoldi.hpp"
#include "dkr/errors.hpp"

namespace dkr {

/// One (k, gamma) point of the classical-quantum comparison.
///
/// sign_diff = (sgn J_c - sgn J_q) / 2 with sgn(0) := 0, so the value is
/// usually in {-1, 0, +1}; an exact zero current against a nonzero one
/// produces +-1/2, stored exactly and flagged rather than rounded.
struct ComparisonRecord {
  double k = 0.0;
  double gamma = 0.0;
  double J_c_thermal = 0.0;
  double J_q = 0.0;
  std::map<double, double> delta_spectral;  // threshold -> delta
  double sign_diff = 0.0;
  bool sign_diff_half_integer = false;

  nlohmann::json to_json() const {
    nlohmann::json deltas = nlohmann::json::object();
    for (const auto& [thr, val] : delta_spectral) {
      deltas[std::to_string(thr)] = val;
    }
    return nlohmann::json{{"k", k},
                          {"gamma", gamma},
                          {"J_c_thermal", J_c_thermal},
                          {"J_q", J_q},
                          {"delta_spectral", deltas},
                          {"sign_diff", sign_diff},
                          {"sign_diff_half_integer", sign_diff_half_integer}};
  }
};

/// Subset of a spectrum with |lambda| >= r_min, order preserved.
inline Spectrum filter_spectrum(const Spectrum& spec, double r_min) {
  if (!(r_min > 0.0 && r_min <= 1.0)) {
    throw DomainError("filter_spectrum: r_min must lie in (0, 1]");
  }
  Spectrum out;
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    if (std::abs(spec.eigenvalues[i]) >= r_min) {
      out.eigenvalues.push_back(spec.eigenvalues[i]);
      if (i < spec.eigenvectors.size()) {
        out.eigenvectors.push_back(spec.eigenvectors[i]);
      }
      if (i < spec.residuals.size()) {
        out.residuals.push_back(spec.residuals[i]);
      }
    }
  }
  if (out.eigenvalues.empty()) {
    throw EmptyError("filter_spectrum: no eigenvalue above modulus " +
                     std::to_string(r_min));
  }
  return out;
}

namespace detail {

inline double nearest_distance(const Complex& z,
                               const std::vector<Complex>& pool) {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& w : pool) {
    best = std::min(best, std::abs(z - w));
  }
  return best;
}

}  // namespace detail

/// One-directional variant: mean distance from each eigenvalue of `from`
/// (above r_min) to its nearest neighbor in `to` (above r_min).
inline double spectral_distance_directed(const Spectrum& from,
                                         const Spectrum& to, double r_min) {
  const Spectrum f = filter_spectrum(from, r_min);
  const Spectrum t = filter_spectrum(to, r_min);
  double sum = 0.0;
  for (const Complex& z : f.eigenvalues) {
    sum += detail::nearest_distance(z, t.eigenvalues);
  }
  return sum / static_cast<double>(f.eigenvalues.size());
}

/// Average nearest-neighbor distance in the complex plane between the two
/// spectra after modulus filtering, with both directions pooled into a
/// single mean (symmetric in its arguments).
inline double spectral_distance(const Spectrum& spec_c, const Spectrum& spec_q,
                                double r_min) {
  const Spectrum c = filter_spectrum(spec_c, r_min);
  const Spectrum q = filter_spectrum(spec_q, r_min);
  double sum = 0.0;
  for (const Complex& z : q.eigenvalues) {
    sum += detail::nearest_distance(z, c.eigenvalues);
  }
  for (const Complex& z : c.eigenvalues) {
    sum += detail::nearest_distance(z, q.eigenvalues);
  }
  return sum /
         static_cast<double>(c.eigenvalues.size() + q.eigenvalues.size());
}

struct CurrentDifference {
  double abs_diff = 0.0;
  double sign_diff = 0.0;          // (sgn J_c - sgn J_q) / 2, sgn(0) := 0
  bool half_integer = false;       // exact-zero current against nonzero one
};

inline CurrentDifference current_difference(double j_c, double j_q) {
  if (!std::isfinite(j_c) || !std::isfinite(j_q)) {
    throw DomainError("current_difference: inputs must be finite");
  }
  auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  CurrentDifference d;
  d.abs_diff = std::abs(j_c - j_q);
  d.sign_diff = 0.5 * (sgn(j_c) - sgn(j_q));
  d.half_integer = d.sign_diff != std::round(d.sign_diff);
  return d;
}

}  // namespace dkr

#endif  // DKR_COMPARE_HPP
