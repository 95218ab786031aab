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

#ifndef DKR_ERRORS_HPP
#define DKR_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dkr {

/// Parameter or argument outside its admissible domain.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A trajectory left the guard bound on |n|.
struct OverflowError : std::runtime_error {
  std::size_t trajectory_index;
  OverflowError(const std::string& msg, std::size_t idx)
      : std::runtime_error(msg), trajectory_index(idx) {}
};

/// Too much probability escaped the momentum window of an Ulam build.
struct LeakError : std::runtime_error {
  double leak_fraction;
  LeakError(const std::string& msg, double leak)
      : std::runtime_error(msg), leak_fraction(leak) {}
};

/// Arnoldi restarts exhausted before the requested pairs converged.
struct ConvergenceError : std::runtime_error {
  int converged_count;
  ConvergenceError(const std::string& msg, int converged)
      : std::runtime_error(msg), converged_count(converged) {}
};

/// Dense solve requested above the size guard.
struct SizeError : std::runtime_error {
  explicit SizeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Trace drift of the dissipative integrator exceeded tolerance.
struct IntegrationError : std::runtime_error {
  double trace_drift;
  IntegrationError(const std::string& msg, double drift)
      : std::runtime_error(msg), trace_drift(drift) {}
};

/// More than one channel eigenvalue within tolerance of 1.
struct DegeneracyError : std::runtime_error {
  explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A modulus filter left no eigenvalues.
struct EmptyError : std::runtime_error {
  explicit EmptyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Phase-space grids do not line up.
struct GeometryError : std::runtime_error {
  explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Plot emission asked for artifacts the store does not have.
struct MissingArtifactError : std::runtime_error {
  explicit MissingArtifactError(const std::string& msg)
      : std::runtime_error(msg) {}
};

/// Malformed or inconsistent sweep configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dkr

#endif  // DKR_ERRORS_HPP
