// Copyright 2026 The qcomb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QCOMB_CONFIG_HPP
#define QCOMB_CONFIG_HPP

// Run configuration: flat `key = value` text, units spelled out in the key names.
//
//   omega1_ghz = 5.11
//   omega2_ghz = 5.03
//   g12_mhz = 11
//   t1_ns = 97
//   t2_ns = 97
//   scan_t1_ns = 85:115:1     # start:stop:step, or a comma-separated list

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcomb/analyze.hpp"
#include "qcomb/errors.hpp"
#include "qcomb/io.hpp"
#include "qcomb/model.hpp"
#include "qcomb/protocol.hpp"
#include "qcomb/reconstruct.hpp"

namespace qcomb {

struct RunConfig {
  ModelParams model;
  std::int64_t shots = 16384;
  std::uint64_t seed = 0;
  std::optional<ReadoutErrorModel> noise;
  CollapseFrame frame = CollapseFrame::Computational;
  PipelineOptions pipeline;
  int bootstrap_trials = 1000;
  int bootstrap_resample_shots = 8000;
  std::vector<double> scan_t1_ns;
  std::vector<double> scan_t2_ns;
  std::string input;
  std::string output_dir = ".";

  BootstrapOptions bootstrap_options() const {
    BootstrapOptions b;
    b.trials = bootstrap_trials;
    b.resample_shots = bootstrap_resample_shots;
    b.seed = seed;
    return b;
  }

  void validate() const {
    model.validate();
    if (shots < 1) throw UsageError("shots must be at least 1", "shots");
    if (noise) noise->validate();
    if (!(pipeline.projection.tol > 0.0)) throw UsageError("projection_tol must be positive", "projection_tol");
    if (pipeline.projection.max_iter < 1) {
      throw UsageError("projection_max_iter must be positive", "projection_max_iter");
    }
    if (bootstrap_trials < 2) throw UsageError("bootstrap_trials must be at least 2", "bootstrap_trials");
    if (bootstrap_resample_shots < 1) {
      throw UsageError("bootstrap_resample_shots must be positive", "bootstrap_resample_shots");
    }
    for (double t : scan_t1_ns) {
      if (!(t >= 0.0)) throw UsageError("scan times must be non-negative", "scan_t1_ns");
    }
    for (double t : scan_t2_ns) {
      if (!(t >= 0.0)) throw UsageError("scan times must be non-negative", "scan_t2_ns");
    }
  }
};

/// "start:stop:step" (inclusive of stop up to rounding) or "a,b,c".
inline std::vector<double> parse_grid(std::string_view text, const std::string& field) {
  auto num = [&](std::string_view tok) {
    try {
      return io::parse_double(tok, field);
    } catch (const InputError& e) {
      throw UsageError(e.what(), field);
    }
  };
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = io::split(text, ':');
    if (parts.size() != 3) throw UsageError(field + ": expected start:stop:step", field);
    const double start = num(parts[0]), stop = num(parts[1]), step = num(parts[2]);
    if (!(step > 0.0) || stop < start) throw UsageError(field + ": empty or ill-formed range", field);
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else {
    for (auto tok : io::split(text, ',')) {
      if (!tok.empty()) out.push_back(num(tok));
    }
  }
  if (out.empty()) throw UsageError(field + ": empty grid", field);
  return out;
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::optional<double> p01, p10;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = line;
    if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = io::trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(io::trim(l.substr(0, eq)));
    const std::string_view value = io::trim(l.substr(eq + 1));
    auto real = [&]() {
      try {
        return io::parse_double(value, key);
      } catch (const InputError& e) {
        throw UsageError(e.what(), key);
      }
    };
    auto integer = [&]() {
      try {
        return io::parse_int(value, key);
      } catch (const InputError& e) {
        throw UsageError(e.what(), key);
      }
    };
    auto choice = [&](auto parse) {
      try {
        return parse(value);
      } catch (const InputError& e) {
        throw UsageError(std::string(key) + ": " + e.what(), key);
      }
    };
    if (key == "omega1_ghz") c.model.omega1_ghz = real();
    else if (key == "omega2_ghz") c.model.omega2_ghz = real();
    else if (key == "g12_mhz") c.model.g12_mhz = real();
    else if (key == "t1_ns") c.model.t1_ns = real();
    else if (key == "t2_ns") c.model.t2_ns = real();
    else if (key == "angular_factor") c.model.angular_factor = real();
    else if (key == "shots") c.shots = integer();
    else if (key == "seed") {
      const auto s = integer();
      if (s < 0) throw UsageError("seed must be non-negative", key);
      c.seed = static_cast<std::uint64_t>(s);
    }
    else if (key == "readout_p01") p01 = real();
    else if (key == "readout_p10") p10 = real();
    else if (key == "frame") c.frame = choice(parse_frame);
    else if (key == "projection_tol") c.pipeline.projection.tol = real();
    else if (key == "projection_max_iter") c.pipeline.projection.max_iter = static_cast<int>(integer());
    else if (key == "weighting") {
      if (value == "uniform") c.pipeline.inversion.weighting = Weighting::Uniform;
      else if (value == "variance") c.pipeline.inversion.weighting = Weighting::Variance;
      else throw UsageError("weighting must be 'uniform' or 'variance'", key);
    }
    else if (key == "normalization") c.pipeline.normalization = choice(parse_normalization);
    else if (key == "bootstrap_trials") c.bootstrap_trials = static_cast<int>(integer());
    else if (key == "bootstrap_resample_shots") c.bootstrap_resample_shots = static_cast<int>(integer());
    else if (key == "scan_t1_ns") c.scan_t1_ns = parse_grid(value, key);
    else if (key == "scan_t2_ns") c.scan_t2_ns = parse_grid(value, key);
    else if (key == "input") c.input = std::string(value);
    else if (key == "output_dir") c.output_dir = std::string(value);
    else throw UsageError("unknown config key '" + key + "'", key);
  }
  if (p01 || p10) c.noise = ReadoutErrorModel{p01.value_or(0.0), p10.value_or(0.0)};
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'", "config");
  return parse_config(in);
}

}  // namespace qcomb

#endif  // QCOMB_CONFIG_HPP
