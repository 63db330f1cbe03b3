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

#ifndef QCOMB_PROTOCOL_HPP
#define QCOMB_PROTOCOL_HPP

// Prepare-measure-prepare-measure tomography settings, Born-rule outcome
// distributions, synthetic shot sampling and the counts file format.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qcomb/errors.hpp"
#include "qcomb/io.hpp"
#include "qcomb/model.hpp"
#include "qcomb/qops.hpp"
#include "qcomb/random.hpp"

namespace qcomb {

enum class Axis : std::uint8_t { X, Y, Z };
enum class Sign : std::uint8_t { Plus, Minus };

inline constexpr std::array<Axis, 3> kAxes = {Axis::X, Axis::Y, Axis::Z};

constexpr char axis_name(Axis a) noexcept { return a == Axis::X ? 'X' : a == Axis::Y ? 'Y' : 'Z'; }

inline Axis parse_axis(std::string_view s) {
  if (s == "X") return Axis::X;
  if (s == "Y") return Axis::Y;
  if (s == "Z") return Axis::Z;
  throw InputError("unknown observable '" + std::string(s) + "'");
}

/// Eigenstate of a Pauli observable.
struct BasisState {
  Axis axis = Axis::Z;
  Sign sign = Sign::Plus;
  auto operator<=>(const BasisState&) const = default;
};

inline constexpr std::array<BasisState, 6> kBasisStates = {
    BasisState{Axis::X, Sign::Plus}, BasisState{Axis::X, Sign::Minus},
    BasisState{Axis::Y, Sign::Plus}, BasisState{Axis::Y, Sign::Minus},
    BasisState{Axis::Z, Sign::Plus}, BasisState{Axis::Z, Sign::Minus}};

constexpr std::size_t state_index(BasisState s) noexcept {
  return 2 * static_cast<std::size_t>(s.axis) + static_cast<std::size_t>(s.sign);
}

inline std::string state_name(BasisState s) {
  return std::string(1, axis_name(s.axis)) + (s.sign == Sign::Plus ? '+' : '-');
}

inline BasisState parse_state(std::string_view s) {
  if (s.size() != 2 || (s[1] != '+' && s[1] != '-')) {
    throw InputError("unknown basis state '" + std::string(s) + "'");
  }
  return {parse_axis(s.substr(0, 1)), s[1] == '+' ? Sign::Plus : Sign::Minus};
}

inline Eigen::Vector2cd state_vector(BasisState s) {
  const double r = 1.0 / std::sqrt(2.0);
  const double sg = s.sign == Sign::Plus ? 1.0 : -1.0;
  switch (s.axis) {
    case Axis::X: return {r, sg * r};
    case Axis::Y: return {r, cplx(0.0, sg * r)};
    case Axis::Z: return s.sign == Sign::Plus ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
  }
  return {};
}

inline Matrix projector(BasisState s) {
  const Eigen::Vector2cd v = state_vector(s);
  return v * v.adjoint();
}

/// Fixed re-preparation rotations. R_A(theta) = exp(-i theta sigma_A / 2).
enum class Gate : std::uint8_t { I, RX90, RXm90, RY90, RYm90, RX180 };

inline constexpr std::array<Gate, 6> kGates = {Gate::I,    Gate::RX90,  Gate::RXm90,
                                               Gate::RY90, Gate::RYm90, Gate::RX180};

constexpr std::string_view gate_name(Gate g) noexcept {
  switch (g) {
    case Gate::I: return "I";
    case Gate::RX90: return "RX90";
    case Gate::RXm90: return "RX-90";
    case Gate::RY90: return "RY90";
    case Gate::RYm90: return "RY-90";
    case Gate::RX180: return "RX180";
  }
  return "?";
}

inline Gate parse_gate(std::string_view s) {
  for (Gate g : kGates) {
    if (gate_name(g) == s) return g;
  }
  throw InputError("unknown rotation gate '" + std::string(s) + "'");
}

inline Matrix gate_unitary(Gate g) {
  auto rot = [](int axis, double theta) -> Matrix {
    return std::cos(theta / 2) * pauli(0) - cplx(0.0, std::sin(theta / 2)) * pauli(axis);
  };
  constexpr double half_pi = 1.5707963267948966;
  switch (g) {
    case Gate::I: return pauli(0);
    case Gate::RX90: return rot(1, half_pi);
    case Gate::RXm90: return rot(1, -half_pi);
    case Gate::RY90: return rot(2, half_pi);
    case Gate::RYm90: return rot(2, -half_pi);
    case Gate::RX180: return rot(1, 2 * half_pi);
  }
  return pauli(0);
}

/// Which state the mid-circuit readout leaves the qubit in before re-preparation.
enum class CollapseFrame : std::uint8_t {
  /// Readout rotates the measured axis onto Z, so the qubit is left in |0> or |1>.
  Computational,
  /// The qubit is left in the eigenstate of the measured observable. With this gate set
  /// the resulting tomography is not informationally complete (design rank 224).
  Eigenbasis,
};

constexpr std::string_view frame_name(CollapseFrame f) noexcept {
  return f == CollapseFrame::Computational ? "computational" : "eigenbasis";
}

inline CollapseFrame parse_frame(std::string_view s) {
  if (s == "computational") return CollapseFrame::Computational;
  if (s == "eigenbasis") return CollapseFrame::Eigenbasis;
  throw InputError("unknown collapse frame '" + std::string(s) + "'");
}

/// The basis state prepared by `gate` after the readout at B reported `result_b`.
inline BasisState realized_preparation(BasisState result_b, Gate gate,
                                       CollapseFrame frame = CollapseFrame::Computational) {
  const BasisState collapsed =
      frame == CollapseFrame::Eigenbasis ? result_b : BasisState{Axis::Z, result_b.sign};
  const Eigen::Vector2cd image = gate_unitary(gate) * state_vector(collapsed);
  for (BasisState s : kBasisStates) {
    if (std::norm(state_vector(s).dot(image)) > 1.0 - 1e-10) return s;
  }
  throw InternalError("rotation " + std::string(gate_name(gate)) + " maps " + state_name(result_b) +
                      " outside the basis set");
}

struct Setting {
  BasisState prep_a;
  Axis meas_b = Axis::X;
  Gate reprep_b = Gate::I;
  Axis meas_c = Axis::X;
  auto operator<=>(const Setting&) const = default;
};

inline constexpr std::size_t kNumSettings = 324;
inline constexpr std::size_t kOutcomesPerSetting = 4;
inline constexpr std::size_t kNumCategories = kNumSettings * kOutcomesPerSetting;

/// Position in the canonical lexicographic order over (prep_a, meas_b, reprep_b, meas_c).
constexpr std::size_t setting_index(const Setting& s) noexcept {
  return ((state_index(s.prep_a) * 3 + static_cast<std::size_t>(s.meas_b)) * 6 +
          static_cast<std::size_t>(s.reprep_b)) * 3 +
         static_cast<std::size_t>(s.meas_c);
}

inline Setting setting_at(std::size_t index) {
  if (index >= kNumSettings) throw DomainError("setting index out of range");
  Setting s;
  s.meas_c = kAxes[index % 3];
  index /= 3;
  s.reprep_b = kGates[index % 6];
  index /= 6;
  s.meas_b = kAxes[index % 3];
  index /= 3;
  s.prep_a = kBasisStates[index];
  return s;
}

inline std::vector<Setting> enumerate_settings() {
  std::vector<Setting> out;
  out.reserve(kNumSettings);
  for (std::size_t i = 0; i < kNumSettings; ++i) out.push_back(setting_at(i));
  return out;
}

inline std::string setting_name(const Setting& s) {
  return "(" + state_name(s.prep_a) + ", " + axis_name(s.meas_b) + ", " +
         std::string(gate_name(s.reprep_b)) + ", " + axis_name(s.meas_c) + ")";
}

/// One recorded shot: prepared state at A, readout at B, state actually re-prepared, readout at C.
struct ShotTuple {
  BasisState prep_a;
  BasisState result_b;
  BasisState reprep_realized;
  BasisState result_c;
  auto operator<=>(const ShotTuple&) const = default;
};

/// Outcome slot within a setting: 0 = (+,+), 1 = (+,-), 2 = (-,+), 3 = (-,-) for (B, C).
constexpr std::size_t outcome_index(Sign b, Sign c) noexcept {
  return 2 * static_cast<std::size_t>(b) + static_cast<std::size_t>(c);
}

inline ShotTuple shot_tuple(const Setting& s, std::size_t outcome,
                            CollapseFrame frame = CollapseFrame::Computational) {
  const BasisState b{s.meas_b, outcome < 2 ? Sign::Plus : Sign::Minus};
  const BasisState c{s.meas_c, outcome % 2 == 0 ? Sign::Plus : Sign::Minus};
  return {s.prep_a, b, realized_preparation(b, s.reprep_b, frame), c};
}

/// rho(prep_a)^T (x) Pi(result_b) (x) rho(reprep_realized)^T (x) Pi(result_c) on (A_O, B_I, B_O, C_I).
inline LabeledOperator effect_operator(const ShotTuple& t) {
  const LabeledOperator a({Label::AO}, projector(t.prep_a).transpose());
  const LabeledOperator b({Label::BI}, projector(t.result_b));
  const LabeledOperator r({Label::BO}, projector(t.reprep_realized).transpose());
  const LabeledOperator c({Label::CI}, projector(t.result_c));
  return tensor(tensor(a, b), tensor(r, c));
}

namespace detail {

/// The effect of a shot tuple is the rank-one projector onto this vector.
inline Eigen::VectorXcd effect_vector(const ShotTuple& t) {
  const Eigen::Vector2cd f[4] = {state_vector(t.prep_a).conjugate(), state_vector(t.result_b),
                                 state_vector(t.reprep_realized).conjugate(), state_vector(t.result_c)};
  Eigen::VectorXcd v(16);
  for (int i = 0; i < 16; ++i) v(i) = f[0](i >> 3 & 1) * f[1](i >> 2 & 1) * f[2](i >> 1 & 1) * f[3](i & 1);
  return v;
}

}  // namespace detail

using OutcomeProbabilities = std::array<double, kOutcomesPerSetting>;

/// Generalized Born rule p(tuple) = Tr[W effect(tuple)] over the four reachable tuples.
inline OutcomeProbabilities born_distribution(const ProcessMatrix& w, const Setting& s,
                                              CollapseFrame frame = CollapseFrame::Computational) {
  OutcomeProbabilities p{};
  for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
    const Eigen::VectorXcd e = detail::effect_vector(shot_tuple(s, k, frame));
    const cplx v = e.dot(w.matrix() * e);
    if (std::abs(v.imag()) > 1e-10) throw InternalError("Born probability has an imaginary part");
    if (v.real() < -1e-9 && w.status() != ProcessStatus::RawReconstruction) {
      throw InternalError("negative Born probability for a physical process at " + setting_name(s));
    }
    p[k] = v.real();
  }
  return p;
}

/// Independent readout misclassification at B and C; 0 stands for the + outcome.
struct ReadoutErrorModel {
  double p01 = 0.0;  ///< P(read 1 | true 0)
  double p10 = 0.0;  ///< P(read 0 | true 1)

  void validate() const {
    if (!(p01 >= 0.0 && p01 <= 1.0)) throw UsageError("readout_p01 must lie in [0,1]", "readout_p01");
    if (!(p10 >= 0.0 && p10 <= 1.0)) throw UsageError("readout_p10 must lie in [0,1]", "readout_p10");
  }

  /// Distribution over recorded outcomes given the true one. The re-preparation label
  /// follows the recorded B outcome, which is what outcome slots encode.
  OutcomeProbabilities confuse(const OutcomeProbabilities& truth) const {
    const double c[2][2] = {{1.0 - p01, p01}, {p10, 1.0 - p10}};  // c[true][read]
    OutcomeProbabilities out{};
    for (std::size_t tb = 0; tb < 2; ++tb)
      for (std::size_t tc = 0; tc < 2; ++tc)
        for (std::size_t rb = 0; rb < 2; ++rb)
          for (std::size_t rc = 0; rc < 2; ++rc)
            out[2 * rb + rc] += truth[2 * tb + tc] * c[tb][rb] * c[tc][rc];
    return out;
  }
};

/// Per-setting outcome weights. Counts are integers for sampled data and
/// shots * probability in exact (infinite-shot) mode.
struct SettingCounts {
  std::array<double, kOutcomesPerSetting> counts{};
  double total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

struct CountsTable {
  double shots_per_setting = 0.0;
  std::uint64_t seed = 0;
  bool exact = false;
  CollapseFrame frame = CollapseFrame::Computational;
  std::string provenance;
  std::map<std::size_t, SettingCounts> by_setting;  ///< keyed by setting_index()

  std::vector<std::size_t> missing_settings() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < kNumSettings; ++i) {
      const auto it = by_setting.find(i);
      if (it == by_setting.end() || it->second.total() <= 0.0) out.push_back(i);
    }
    return out;
  }

  bool complete() const { return missing_settings().empty(); }

  OutcomeProbabilities frequencies(std::size_t index) const {
    const auto it = by_setting.find(index);
    if (it == by_setting.end() || it->second.total() <= 0.0) {
      throw InputError("no counts for setting " + setting_name(setting_at(index)));
    }
    OutcomeProbabilities f{};
    const double n = it->second.total();
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) f[k] = it->second.counts[k] / n;
    return f;
  }

  double total_shots() const {
    double n = 0.0;
    for (const auto& [i, c] : by_setting) n += c.total();
    return n;
  }
};

/// Draws `shots` outcomes per setting from the Born distribution of `w`, optionally
/// through readout confusion. Setting i uses its own stream derived from `seed`.
inline CountsTable sample_counts(const ProcessMatrix& w, std::int64_t shots, std::uint64_t seed,
                                 const std::optional<ReadoutErrorModel>& noise = std::nullopt,
                                 CollapseFrame frame = CollapseFrame::Computational) {
  if (shots < 1) throw DomainError("sample_counts: shots must be at least 1");
  if (noise) noise->validate();
  CountsTable table;
  table.shots_per_setting = static_cast<double>(shots);
  table.seed = seed;
  table.frame = frame;
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    auto p = born_distribution(w, setting_at(i), frame);
    if (noise) p = noise->confuse(p);
    Rng rng = derive_rng(seed, /*stream=*/1, i);
    const auto draw = multinomial(shots, p, rng);
    SettingCounts& c = table.by_setting[i];
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) c.counts[k] = static_cast<double>(draw[k]);
  }
  return table;
}

/// Infinite-shot limit: counts are shots * probability.
inline CountsTable exact_counts(const ProcessMatrix& w, double shots = 16384.0,
                                const std::optional<ReadoutErrorModel>& noise = std::nullopt,
                                CollapseFrame frame = CollapseFrame::Computational) {
  if (noise) noise->validate();
  CountsTable table;
  table.shots_per_setting = shots;
  table.exact = true;
  table.frame = frame;
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    auto p = born_distribution(w, setting_at(i), frame);
    if (noise) p = noise->confuse(p);
    SettingCounts& c = table.by_setting[i];
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) c.counts[k] = shots * p[k];
  }
  return table;
}

// ---------------------------------------------------------------------------
// Counts file
//
//   qcomb-counts v1
//   shots_per_setting 16384
//   seed 7
//   mode sampled                 (or: exact)
//   frame computational
//   provenance <free text>
//   records 1296
//   prep_a meas_b reprep_b meas_c result_b reprep_realized result_c count
//   X+ X I X X+ Z+ X+ 4113
//   ...
//   end

inline void write_counts(std::ostream& out, const CountsTable& t) {
  const std::size_t records = t.by_setting.size() * kOutcomesPerSetting;
  out << "qcomb-counts v1\n";
  out << "shots_per_setting " << io::format_double(t.shots_per_setting) << '\n';
  out << "seed " << t.seed << '\n';
  out << "mode " << (t.exact ? "exact" : "sampled") << '\n';
  out << "frame " << frame_name(t.frame) << '\n';
  out << "provenance " << t.provenance << '\n';
  out << "records " << records << '\n';
  out << "prep_a meas_b reprep_b meas_c result_b reprep_realized result_c count\n";
  for (const auto& [index, c] : t.by_setting) {
    const Setting s = setting_at(index);
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
      const ShotTuple tuple = shot_tuple(s, k, t.frame);
      out << state_name(s.prep_a) << ' ' << axis_name(s.meas_b) << ' ' << gate_name(s.reprep_b) << ' '
          << axis_name(s.meas_c) << ' ' << state_name(tuple.result_b) << ' '
          << state_name(tuple.reprep_realized) << ' ' << state_name(tuple.result_c) << ' ';
      if (t.exact) {
        out << io::format_double(c.counts[k]);
      } else {
        out << static_cast<std::int64_t>(std::llround(c.counts[k]));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

/// Parses and validates a counts file. Errors name the first offending line.
inline CountsTable read_counts(std::istream& in) {
  CountsTable t;
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return "counts file line " + std::to_string(lineno); };
  auto next = [&](const char* what) -> std::string_view {
    if (!std::getline(in, line)) throw InputError(std::string("counts file: missing ") + what);
    ++lineno;
    return io::trim(line);
  };
  if (next("header") != "qcomb-counts v1") throw InputError(where() + ": bad header");

  bool have_shots = false;
  std::optional<std::size_t> declared_records;
  while (true) {
    const auto l = next("column header");
    if (l.empty()) continue;
    if (l.starts_with("prep_a")) break;
    const auto sp = l.find(' ');
    const auto key = l.substr(0, sp);
    const auto value = sp == std::string_view::npos ? std::string_view{} : io::trim(l.substr(sp));
    if (key == "shots_per_setting") {
      t.shots_per_setting = io::parse_double(value, where());
      have_shots = true;
    } else if (key == "seed") {
      t.seed = static_cast<std::uint64_t>(io::parse_int(value, where()));
    } else if (key == "mode") {
      if (value != "exact" && value != "sampled") throw InputError(where() + ": unknown mode");
      t.exact = value == "exact";
    } else if (key == "frame") {
      t.frame = parse_frame(value);
    } else if (key == "provenance") {
      t.provenance = std::string(value);
    } else if (key == "records") {
      declared_records = static_cast<std::size_t>(io::parse_int(value, where()));
    } else {
      throw InputError(where() + ": unknown header key '" + std::string(key) + "'");
    }
  }

  std::map<std::size_t, std::array<bool, kOutcomesPerSetting>> seen;
  std::size_t records = 0;
  while (true) {
    const auto l = next("end marker");
    if (l.empty()) continue;
    if (l == "end") break;
    const auto f = io::split_ws(l);
    if (f.size() != 8) throw InputError(where() + ": malformed record, expected 8 fields");
    Setting s;
    BasisState b, r, c;
    double count = 0.0;
    try {
      s.prep_a = parse_state(f[0]);
      s.meas_b = parse_axis(f[1]);
      s.reprep_b = parse_gate(f[2]);
      s.meas_c = parse_axis(f[3]);
      b = parse_state(f[4]);
      r = parse_state(f[5]);
      c = parse_state(f[6]);
      count = io::parse_double(f[7], "count");
    } catch (const InputError& e) {
      throw InputError(where() + ": malformed record: " + e.what());
    }
    if (b.axis != s.meas_b || c.axis != s.meas_c) {
      throw InputError(where() + ": outcome axis does not match the observable");
    }
    if (r != realized_preparation(b, s.reprep_b, t.frame)) {
      throw InputError(where() + ": reprep_realized " + state_name(r) + " is not the image of " +
                       state_name(b) + " under " + std::string(gate_name(s.reprep_b)));
    }
    if (count < 0.0) throw InputError(where() + ": negative count");
    if (!t.exact && count != std::floor(count)) throw InputError(where() + ": non-integer count");
    const std::size_t idx = setting_index(s);
    const std::size_t k = outcome_index(b.sign, c.sign);
    auto& flags = seen[idx];
    if (flags[k]) throw InputError(where() + ": duplicate record");
    flags[k] = true;
    t.by_setting[idx].counts[k] = count;
    ++records;
  }
  if (declared_records && *declared_records != records) {
    throw InputError("counts file: header declares " + std::to_string(*declared_records) +
                     " records but " + std::to_string(records) + " were read");
  }
  if (have_shots) {
    for (const auto& [idx, c] : t.by_setting) {
      if (std::abs(c.total() - t.shots_per_setting) > 1e-6 * std::max(1.0, t.shots_per_setting)) {
        throw InputError("counts file: setting " + setting_name(setting_at(idx)) + " totals " +
                         io::format_short(c.total()) + " shots, header says " +
                         io::format_short(t.shots_per_setting));
      }
    }
  }
  return t;
}

}  // namespace qcomb

#endif  // QCOMB_PROTOCOL_HPP
