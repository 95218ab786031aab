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

#ifndef DKR_IO_HPP
#define DKR_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dkr/errors.hpp"

namespace dkr {

namespace fs = std::filesystem;

/// Writes `content` to `path` atomically (temp file + rename), so readers
/// and crashed writers can never observe a torn file.
inline void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fixed-width numeric formatting for data rows: enough digits for exact
/// double round-trip, identical across runs.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Binary matrix dumps with a JSON sidecar header.
// ---------------------------------------------------------------------------

/// Writes raw little-endian doubles (column-major for matrices) to
/// <path> and a JSON header to <path>.json describing the payload.
inline void write_binary_matrix(const fs::path& path,
                                const Eigen::MatrixXd& m,
                                const std::string& kind) {
  std::string payload(reinterpret_cast<const char*>(m.data()),
                      sizeof(double) * static_cast<std::size_t>(m.size()));
  atomic_write(path, payload);
  nlohmann::json header{{"kind", kind},
                        {"dtype", "float64"},
                        {"order", "column-major"},
                        {"rows", m.rows()},
                        {"cols", m.cols()}};
  atomic_write(path.string() + ".json", header.dump(2) + "\n");
}

inline Eigen::MatrixXd read_binary_matrix(const fs::path& path) {
  const nlohmann::json header =
      nlohmann::json::parse(read_file(path.string() + ".json"));
  const auto rows = header.at("rows").get<Eigen::Index>();
  const auto cols = header.at("cols").get<Eigen::Index>();
  const std::string payload = read_file(path);
  if (payload.size() != sizeof(double) * static_cast<std::size_t>(rows * cols)) {
    throw MissingArtifactError("payload size mismatch: " + path.string());
  }
  Eigen::MatrixXd m(rows, cols);
  std::memcpy(m.data(), payload.data(), payload.size());
  return m;
}

/// Complex matrices are stored as two stacked real matrices (re; im).
inline void write_binary_cmatrix(const fs::path& path,
                                 const Eigen::MatrixXcd& m,
                                 const std::string& kind) {
  Eigen::MatrixXd stacked(2 * m.rows(), m.cols());
  stacked.topRows(m.rows()) = m.real();
  stacked.bottomRows(m.rows()) = m.imag();
  write_binary_matrix(path, stacked, kind + "/complex-stacked");
}

inline Eigen::MatrixXcd read_binary_cmatrix(const fs::path& path) {
  const Eigen::MatrixXd stacked = read_binary_matrix(path);
  const Eigen::Index r = stacked.rows() / 2;
  Eigen::MatrixXcd m(r, stacked.cols());
  m.real() = stacked.topRows(r);
  m.imag() = stacked.bottomRows(r);
  return m;
}

// ---------------------------------------------------------------------------
// CSV helpers.
// ---------------------------------------------------------------------------

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

/// Minimal CSV reader: no quoting (the toolkit never writes quoted cells).
inline std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace dkr

#endif  // DKR_IO_HPP
