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

#ifndef DKR_PARAMS_HPP
#define DKR_PARAMS_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dkr/errors.hpp"

namespace dkr {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kDefaultHbarEff = 0.137;

/// Parameter bundle of the dissipative modified kicked rotator.
///
/// Stores only the five independent parameters; every derived quantity
/// (K, g, temperature, noise variance) is recomputed on demand so it can
/// never fall out of sync.
class Params {
 public:
  Params(double k, double gamma, double hbar_eff = kDefaultHbarEff,
         double a = 0.5, double phi = kPi / 2.0)
      : k_(k), gamma_(gamma), hbar_eff_(hbar_eff), a_(a), phi_(phi) {
    if (!std::isfinite(k) || !std::isfinite(gamma) || !std::isfinite(hbar_eff) ||
        !std::isfinite(a) || !std::isfinite(phi)) {
      throw DomainError("Params: all inputs must be finite");
    }
    if (gamma < 0.0 || gamma > 1.0) {
      throw DomainError("Params: gamma must lie in [0, 1]");
    }
    if (hbar_eff <= 0.0) {
      throw DomainError("Params: hbar_eff must be positive");
    }
    if (k < 0.0) {
      throw DomainError("Params: k must be nonnegative");
    }
  }

  double k() const { return k_; }
  double gamma() const { return gamma_; }
  double hbar_eff() const { return hbar_eff_; }
  double tau() const { return hbar_eff_; }
  double a() const { return a_; }
  double phi() const { return phi_; }

  /// Kick amplitude in n units. k itself is the kick of the map written
  /// in the rescaled momentum p = tau * n (where it also plays the role
  /// of the chaos parameter), so the drive on n carries a 1/tau.
  double kick_n() const { return k_ / hbar_eff_; }

  /// g = sqrt(-ln gamma); undefined (error) at gamma = 0.
  double g() const {
    if (gamma_ == 0.0) {
      throw DomainError("Params: g diverges at gamma = 0");
    }
    return std::sqrt(-std::log(gamma_));
  }

  /// Effective temperature T = hbar_eff / [2 (1 - gamma)], reporting only.
  double temperature() const {
    if (gamma_ >= 1.0) {
      throw DomainError("Params: temperature undefined at gamma = 1");
    }
    return hbar_eff_ / (2.0 * (1.0 - gamma_));
  }

  /// <xi^2> = 2 (1 - gamma) T with xi acting on the rescaled momentum p;
  /// the (1 - gamma) factors cancel identically.
  double noise_variance() const {
    if (gamma_ >= 1.0) {
      throw DomainError("Params: thermal noise undefined at gamma = 1");
    }
    return hbar_eff_;
  }

  bool operator==(const Params& o) const {
    return k_ == o.k_ && gamma_ == o.gamma_ && hbar_eff_ == o.hbar_eff_ &&
           a_ == o.a_ && phi_ == o.phi_;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"k", k_},
                          {"gamma", gamma_},
                          {"hbar_eff", hbar_eff_},
                          {"a", a_},
                          {"phi", phi_}};
  }

  static Params from_json(const nlohmann::json& j) {
    return Params(j.at("k").get<double>(), j.at("gamma").get<double>(),
                  j.at("hbar_eff").get<double>(), j.at("a").get<double>(),
                  j.at("phi").get<double>());
  }

 private:
  double k_;
  double gamma_;
  double hbar_eff_;
  double a_;
  double phi_;
};

inline Params make_params(double k, double gamma,
                          double hbar_eff = kDefaultHbarEff, double a = 0.5,
                          double phi = kPi / 2.0) {
  return Params(k, gamma, hbar_eff, a, phi);
}

/// Identifies one RNG stream inside the run: child seeds are a pure
/// function of (master_seed, point_index, stream_index).
struct SeedLineage {
  std::uint64_t master_seed = 0;
  std::uint64_t point_index = 0;
  std::uint64_t stream_index = 0;
};

namespace detail {
// splitmix64 finalizer; a counter-based mixer with full 64-bit avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

inline std::uint64_t derive_seed(const SeedLineage& lineage) {
  std::uint64_t h = detail::mix64(lineage.master_seed);
  h = detail::mix64(h ^ detail::mix64(lineage.point_index + 0x632be59bd9b4e019ULL));
  h = detail::mix64(h ^ detail::mix64(lineage.stream_index + 0x9e6c63d0876a9a47ULL));
  return h;
}

/// Minimal counter-free generator with an 8-byte state, so an ensemble can
/// carry one stream per trajectory without blowing up memory. Uniform and
/// Gaussian draws are fully specified here (no library distributions), so
/// sequences are identical across standard libraries.
class SmallRng {
 public:
  explicit SmallRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1); never returns 0 so log() below is safe.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (one value per call; the sine partner
  /// is discarded to keep the state a plain counter).
  double gauss() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Flat key-value config serialization ("key = value" lines, UTF-8).
// ---------------------------------------------------------------------------

using KeyValueMap = std::map<std::string, std::string>;

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

inline KeyValueMap parse_key_values(std::istream& in) {
  KeyValueMap kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value', got: " + t);
    }
    kv[detail::trim(t.substr(0, eq))] = detail::trim(t.substr(eq + 1));
  }
  return kv;
}

inline KeyValueMap parse_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_key_values(in);
}

inline void write_key_values(std::ostream& out, const KeyValueMap& kv) {
  for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
}

inline KeyValueMap params_to_key_values(const Params& p) {
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return KeyValueMap{{"k", fmt(p.k())},
                     {"gamma", fmt(p.gamma())},
                     {"hbar_eff", fmt(p.hbar_eff())},
                     {"a", fmt(p.a())},
                     {"phi", fmt(p.phi())}};
}

inline Params params_from_key_values(const KeyValueMap& kv) {
  auto get = [&kv](const std::string& key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stod(it->second);
  };
  auto require = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing required key: " + key);
    return std::stod(it->second);
  };
  return Params(require("k"), require("gamma"),
                get("hbar_eff", kDefaultHbarEff), get("a", 0.5),
                get("phi", kPi / 2.0));
}

}  // namespace dkr

#endif  // DKR_PARAMS_HPP
