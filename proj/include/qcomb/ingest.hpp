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


#ifndef QCOMB_INGEST_HPP
#define QCOMB_INGEST_HPP

// Boundary between hardware result exports and CountsTable. No provider client lives
// here; callers flatten whatever their provider returns into ExportRecord values.
//
// Expected mapping from a typical per-circuit export:
//   circuit metadata "prep_a", "meas_b", "reprep_b", "meas_c"  -> ExportRecord setting fields
//   classical register bitstring of the two mid/final readouts -> ExportRecord::bits
//   histogram value for that bitstring                         -> ExportRecord::count
// Bit characters are ordered (B, C); '0' is the + outcome of the measured observable.

#include <cstdint>
#include <string>
#include <vector>

#include "qcomb/protocol.hpp"

namespace qcomb {

struct ExportRecord {
  std::string prep_a;    ///< "X+" ... "Z-"
  std::string meas_b;    ///< "X", "Y" or "Z"
  std::string reprep_b;  ///< "I", "RX90", "RX-90", "RY90", "RY-90", "RX180"
  std::string meas_c;
  std::string bits;      ///< two characters, readout at B then C
  std::int64_t count = 0;
};

/// Accumulates export records into a sampled CountsTable. Repeated (setting, bits) pairs
/// are summed, which is how split jobs arrive. Shots per setting must agree.
inline CountsTable counts_from_export(const std::vector<ExportRecord>& records, const std::string& provenance,
                                      CollapseFrame frame = CollapseFrame::Computational) {
  CountsTable t;
  t.frame = frame;
  t.provenance = provenance;
  for (std::size_t n = 0; n < records.size(); ++n) {
    const ExportRecord& r = records[n];
    const std::string where = "export record " + std::to_string(n);
    if (r.bits.size() != 2 || (r.bits[0] != '0' && r.bits[0] != '1') || (r.bits[1] != '0' && r.bits[1] != '1')) {
      throw InputError(where + ": bitstring '" + r.bits + "' is not two readout bits");
    }
    if (r.count < 0) throw InputError(where + ": negative count");
    Setting s;
    try {
      s = {parse_state(r.prep_a), parse_axis(r.meas_b), parse_gate(r.reprep_b), parse_axis(r.meas_c)};
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    const Sign b = r.bits[0] == '0' ? Sign::Plus : Sign::Minus;
    const Sign c = r.bits[1] == '0' ? Sign::Plus : Sign::Minus;
    t.by_setting[setting_index(s)].counts[outcome_index(b, c)] += static_cast<double>(r.count);
  }
  for (const auto& [index, c] : t.by_setting) {
    if (t.shots_per_setting == 0.0) t.shots_per_setting = c.total();
    if (c.total() != t.shots_per_setting) {
      throw InputError("export: setting " + setting_name(setting_at(index)) + " has " +
                       io::format_short(c.total()) + " shots, expected " + io::format_short(t.shots_per_setting));
    }
  }
  return t;
}

}  // namespace qcomb

#endif  // QCOMB_INGEST_HPP
