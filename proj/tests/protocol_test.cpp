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

#include "qcomb/protocol.hpp"

#include <random>
#include <set>
#include <sstream>

#include "gtest/gtest.h"

#include "test_util.hpp"

using namespace qcomb;
using namespace qcomb::testing;

namespace {

BasisState st(const char* name) { return parse_state(name); }

std::string serialize(const CountsTable& t) {
  std::ostringstream out;
  write_counts(out, t);
  return out.str();
}

CountsTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_counts(in);
}

std::string replace_first(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

}  // namespace

TEST(protocol, basis_states_are_eigenvectors) {
  for (BasisState s : kBasisStates) {
    const int axis = static_cast<int>(s.axis) + 1;
    const double sign = s.sign == Sign::Plus ? 1.0 : -1.0;
    const Eigen::Vector2cd v = state_vector(s);
    EXPECT_NEAR(v.norm(), 1.0, 1e-15);
    EXPECT_LT((pauli(axis) * v - sign * v).norm(), 1e-15);
    EXPECT_EQ(parse_state(state_name(s)), s);
  }
  EXPECT_THROW(parse_state("W+"), InputError);
  EXPECT_THROW(parse_state("X"), InputError);
}

TEST(protocol, gates_are_the_listed_rotations) {
  for (Gate g : kGates) {
    EXPECT_TRUE(is_unitary(gate_unitary(g)));
    EXPECT_EQ(parse_gate(gate_name(g)), g);
  }
  // RX180 is -i X
  EXPECT_LT(max_abs_diff(gate_unitary(Gate::RX180), cplx(0, -1) * pauli(1)), 1e-15);
  EXPECT_LT(max_abs_diff(gate_unitary(Gate::RX90) * gate_unitary(Gate::RXm90), pauli(0)), 1e-15);
  EXPECT_LT(max_abs_diff(gate_unitary(Gate::RY90) * gate_unitary(Gate::RYm90), pauli(0)), 1e-15);
  EXPECT_THROW(parse_gate("RZ90"), InputError);
}

TEST(protocol, realized_preparation_computational_frame_table) {
  struct Row {
    const char* result;
    Gate gate;
    const char* realized;
  };
  const Row rows[] = {
      {"X+", Gate::I, "Z+"},     {"X-", Gate::I, "Z-"},      {"Y+", Gate::RX90, "Y-"},
      {"Y-", Gate::RX90, "Y+"},  {"Z+", Gate::RXm90, "Y+"},  {"Z-", Gate::RXm90, "Y-"},
      {"X+", Gate::RY90, "X+"},  {"X-", Gate::RY90, "X-"},   {"Z+", Gate::RYm90, "X-"},
      {"Z-", Gate::RYm90, "X+"}, {"Y+", Gate::RX180, "Z-"},  {"Y-", Gate::RX180, "Z+"},
  };
  for (const Row& r : rows) {
    EXPECT_EQ(realized_preparation(st(r.result), r.gate), st(r.realized))
        << r.result << " " << gate_name(r.gate);
  }
}

TEST(protocol, realized_preparation_eigenbasis_frame) {
  const auto e = CollapseFrame::Eigenbasis;
  EXPECT_EQ(realized_preparation(st("X+"), Gate::I, e), st("X+"));
  EXPECT_EQ(realized_preparation(st("X+"), Gate::RY90, e), st("Z-"));
  EXPECT_EQ(realized_preparation(st("Y+"), Gate::RX90, e), st("Z+"));
  EXPECT_EQ(realized_preparation(st("X-"), Gate::RX180, e), st("X-"));
  EXPECT_EQ(realized_preparation(st("Z+"), Gate::RX180, e), st("Z-"));
  EXPECT_EQ(parse_frame(frame_name(e)), e);
  EXPECT_THROW(parse_frame("lab"), InputError);
}

TEST(protocol, realized_preparation_agrees_with_state_vector_action) {
  for (auto frame : {CollapseFrame::Computational, CollapseFrame::Eigenbasis}) {
    for (BasisState b : kBasisStates) {
      for (Gate g : kGates) {
        const BasisState collapsed = frame == CollapseFrame::Computational ? BasisState{Axis::Z, b.sign} : b;
        const Matrix rho = gate_unitary(g) * projector(collapsed) * gate_unitary(g).adjoint();
        EXPECT_LT(max_abs_diff(rho, projector(realized_preparation(b, g, frame))), 1e-12);
      }
    }
  }
}

TEST(protocol, settings_enumerate_lexicographically) {
  const auto all = enumerate_settings();
  ASSERT_EQ(all.size(), kNumSettings);
  std::set<std::string> names;
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(setting_index(all[i]), i);
    names.insert(setting_name(all[i]));
  }
  EXPECT_EQ(names.size(), kNumSettings);
  EXPECT_EQ(setting_name(all.front()), "(X+, X, I, X)");
  EXPECT_EQ(setting_name(all[1]), "(X+, X, I, Y)");
  EXPECT_EQ(setting_name(all[3]), "(X+, X, RX90, X)");
  EXPECT_EQ(setting_name(all.back()), "(Z-, Z, RX180, Z)");
  EXPECT_THROW(setting_at(kNumSettings), DomainError);
}

TEST(protocol, effect_vector_matches_effect_operator) {
  for (std::size_t i = 0; i < kNumSettings; i += 7) {
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
      const ShotTuple t = shot_tuple(setting_at(i), k);
      const Eigen::VectorXcd v = detail::effect_vector(t);
      EXPECT_LT(max_abs_diff(effect_operator(t).matrix(), v * v.adjoint()), 1e-15);
    }
  }
}

TEST(protocol, outcome_slots) {
  const Setting s{st("Y-"), Axis::Z, Gate::RY90, Axis::X};
  const auto t = shot_tuple(s, 2);
  EXPECT_EQ(t.result_b, st("Z-"));
  EXPECT_EQ(t.result_c, st("X+"));
  EXPECT_EQ(t.reprep_realized, st("X-"));
  EXPECT_EQ(outcome_index(Sign::Minus, Sign::Plus), 2U);
}

TEST(protocol, born_rule_matches_circuit_simulation) {
  std::mt19937_64 rng(31);
  std::vector<ModelParams> cases = {ModelParams::uq(90, 90), ModelParams::ibm(24.89, 24.89)};
  for (int i = 0; i < 3; ++i) cases.push_back(random_params(rng));
  for (const auto& p : cases) {
    const auto w = model_process_matrix(p);
    for (std::size_t i = 0; i < kNumSettings; ++i) {
      const Setting s = setting_at(i);
      const auto probs = born_distribution(w, s);
      for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
        const ShotTuple t = shot_tuple(s, k);
        const double oracle = circuit_probability(p, projector(t.prep_a), projector(t.result_b),
                                                  projector(t.reprep_realized), projector(t.result_c));
        ASSERT_NEAR(probs[k], oracle, 1e-9) << setting_name(s) << " slot " << k;
      }
    }
  }
}

TEST(protocol, born_distribution_is_normalized) {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 3; ++rep) {
    const auto w = model_process_matrix(random_params(rng));
    for (auto frame : {CollapseFrame::Computational, CollapseFrame::Eigenbasis}) {
      for (std::size_t i = 0; i < kNumSettings; ++i) {
        const auto p = born_distribution(w, setting_at(i), frame);
        double sum = 0.0;
        for (double x : p) {
          EXPECT_GE(x, -1e-12);
          sum += x;
        }
        EXPECT_NEAR(sum, 1.0, 1e-10);
      }
    }
  }
}

TEST(protocol, b_marginal_ignores_later_choices) {
  // Outcomes at B cannot depend on the re-preparation rotation or the C observable.
  const auto w = model_process_matrix(ModelParams::uq(97, 103));
  for (BasisState a : kBasisStates) {
    for (Axis mb : kAxes) {
      const auto ref = born_distribution(w, {a, mb, Gate::I, Axis::X});
      const double ref_plus = ref[0] + ref[1];
      for (Gate g : kGates) {
        for (Axis mc : kAxes) {
          const auto p = born_distribution(w, {a, mb, g, mc});
          EXPECT_NEAR(p[0] + p[1], ref_plus, 1e-10);
        }
      }
    }
  }
}

TEST(protocol, raw_reconstruction_may_carry_negative_probabilities) {
  Matrix m = ideal_process_matrix().matrix();
  m -= 0.5 * Matrix::Identity(16, 16);
  const ProcessMatrix raw(LabeledOperator(process_labels(), m), ProcessStatus::RawReconstruction);
  EXPECT_NO_THROW(born_distribution(raw, setting_at(1)));
  const ProcessMatrix claimed(LabeledOperator(process_labels(), m), ProcessStatus::Physical);
  bool threw = false;
  for (std::size_t i = 0; i < kNumSettings && !threw; ++i) {
    try {
      born_distribution(claimed, setting_at(i));
    } catch (const InternalError&) {
      threw = true;
    }
  }
  EXPECT_TRUE(threw);
}

TEST(protocol, readout_confusion) {
  const OutcomeProbabilities p = {0.5, 0.2, 0.2, 0.1};
  const ReadoutErrorModel none{};
  EXPECT_EQ(none.confuse(p), p);
  const auto flipped = ReadoutErrorModel{1.0, 1.0}.confuse(p);
  EXPECT_NEAR(flipped[0], 0.1, 1e-15);
  EXPECT_NEAR(flipped[3], 0.5, 1e-15);
  const auto noisy = ReadoutErrorModel{0.03, 0.05}.confuse(p);
  EXPECT_NEAR(noisy[0] + noisy[1] + noisy[2] + noisy[3], 1.0, 1e-15);
  // P(read + at B) = P(true +)(1 - p01) + P(true -) p10
  EXPECT_NEAR(noisy[0] + noisy[1], 0.7 * 0.97 + 0.3 * 0.05, 1e-15);
  EXPECT_THROW((ReadoutErrorModel{-0.1, 0.0}.validate()), UsageError);
  EXPECT_THROW((ReadoutErrorModel{0.0, 1.5}.validate()), UsageError);
}

TEST(protocol, multinomial_moments) {
  Rng rng = derive_rng(5, 0, 0);
  const std::array<double, 4> p = {0.7773, 0.2159, 0.0000, 0.0068};
  const int trials = 4000;
  const std::int64_t n = 8000;
  std::array<double, 4> mean{}, sq{};
  for (int t = 0; t < trials; ++t) {
    const auto d = multinomial(n, p, rng);
    EXPECT_EQ(d[0] + d[1] + d[2] + d[3], n);
    EXPECT_EQ(d[2], 0);
    for (int k = 0; k < 4; ++k) {
      mean[k] += static_cast<double>(d[k]) / trials;
      sq[k] += static_cast<double>(d[k]) * static_cast<double>(d[k]) / trials;
    }
  }
  for (int k = 0; k < 4; ++k) {
    const double var = n * p[k] * (1 - p[k]);
    EXPECT_NEAR(mean[k], n * p[k], 5 * std::sqrt(var / trials) + 1e-12);
    if (var > 0) {
      EXPECT_NEAR(sq[k] - mean[k] * mean[k], var, 0.1 * var);
    }
  }
}

TEST(protocol, sampled_frequencies_follow_born_rule) {
  const auto w = model_process_matrix(ModelParams::uq(90, 90));
  const std::int64_t shots = 16384;
  const auto counts = sample_counts(w, shots, 11);
  EXPECT_TRUE(counts.complete());
  EXPECT_EQ(counts.total_shots(), static_cast<double>(shots) * kNumSettings);
  double chi2 = 0.0;
  int dof = 0;
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    const auto p = born_distribution(w, setting_at(i));
    int cells = 0;
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
      const double expected = shots * p[k];
      const double observed = counts.by_setting.at(i).counts[k];
      if (expected < 1e-6) {
        EXPECT_EQ(observed, 0.0);
        continue;
      }
      chi2 += (observed - expected) * (observed - expected) / expected;
      ++cells;
    }
    dof += cells - 1;
  }
  // Pearson statistic over ~900 degrees of freedom: mean 1 per dof, sd ~0.05
  EXPECT_NEAR(chi2 / dof, 1.0, 0.2);
}

TEST(protocol, sampling_is_deterministic_per_seed) {
  const auto w = model_process_matrix(ModelParams::ibm(20, 30));
  EXPECT_EQ(serialize(sample_counts(w, 1000, 3)), serialize(sample_counts(w, 1000, 3)));
  EXPECT_NE(serialize(sample_counts(w, 1000, 3)), serialize(sample_counts(w, 1000, 4)));
  EXPECT_THROW(sample_counts(w, 0, 3), DomainError);
}

TEST(protocol, exact_counts_are_scaled_probabilities) {
  const auto w = model_process_matrix(ModelParams::uq(90, 90));
  const auto counts = exact_counts(w, 1000.0);
  EXPECT_TRUE(counts.exact);
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    const auto p = born_distribution(w, setting_at(i));
    const auto f = counts.frequencies(i);
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) EXPECT_NEAR(f[k], p[k], 1e-14);
  }
}

TEST(protocol, counts_file_round_trips) {
  const auto w = model_process_matrix(ModelParams::uq(90, 95));
  for (const CountsTable& t : {sample_counts(w, 512, 9), exact_counts(w, 512.0)}) {
    const std::string text = serialize(t);
    const auto back = parse(text);
    EXPECT_EQ(back.exact, t.exact);
    EXPECT_EQ(back.seed, t.seed);
    EXPECT_EQ(back.shots_per_setting, t.shots_per_setting);
    ASSERT_EQ(back.by_setting.size(), kNumSettings);
    for (const auto& [i, c] : t.by_setting) {
      for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
        EXPECT_EQ(back.by_setting.at(i).counts[k], c.counts[k]);
      }
    }
    EXPECT_EQ(serialize(back), text);
  }
}

TEST(protocol, counts_file_rejects_inconsistent_records) {
  const auto w = model_process_matrix(ModelParams::uq(90, 90));
  auto t = sample_counts(w, 100, 1);
  t.by_setting = {{0, t.by_setting.at(0)}};
  const std::string good = serialize(t);
  ASSERT_NO_THROW(parse(good));
  const auto line1 = good.substr(good.find("X+ X I X"), good.find('\n', good.find("X+ X I X")) - good.find("X+ X I X"));

  EXPECT_THROW(parse(replace_first(good, "qcomb-counts v1", "qcomb-counts v0")), InputError);
  EXPECT_THROW(parse(replace_first(good, "records 4", "records 5")), InputError);
  EXPECT_THROW(parse(replace_first(good, "mode sampled", "mode guessed")), InputError);
  EXPECT_THROW(parse(replace_first(good, "seed 1", "colour blue")), InputError);
  EXPECT_THROW(parse(replace_first(good, "\nend\n", "\n")), InputError);
  // realized state inconsistent with the gate
  EXPECT_THROW(parse(replace_first(good, "X+ X I X X+ Z+", "X+ X I X X+ Z-")), InputError);
  // outcome on the wrong axis
  EXPECT_THROW(parse(replace_first(good, "X+ X I X X+ Z+ X", "X+ X I X Y+ Z+ X")), InputError);
  // duplicate record
  EXPECT_THROW(parse(replace_first(good, "end\n", line1 + "\nend\n")), InputError);
  // negative and fractional counts
  const auto last_space = line1.rfind(' ');
  const std::string prefix = line1.substr(0, last_space + 1);
  EXPECT_THROW(parse(replace_first(good, line1, prefix + "-1")), InputError);
  EXPECT_THROW(parse(replace_first(good, line1, prefix + "1.5")), InputError);
  EXPECT_THROW(parse(replace_first(good, line1, prefix + "many")), InputError);
  // per-setting totals must match the header
  EXPECT_THROW(parse(replace_first(good, "shots_per_setting 1.0000000000000000e+02",
                                   "shots_per_setting 1.0100000000000000e+02")),
               InputError);
}

TEST(protocol, counts_file_error_names_the_line) {
  const auto w = model_process_matrix(ModelParams::uq(90, 90));
  auto t = sample_counts(w, 100, 1);
  const std::string bad = replace_first(serialize(t), "X+ X I X X+ Z+", "X+ X I X X+ Z-");
  try {
    parse(bad);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos) << e.what();
  }
}

TEST(protocol, missing_settings_are_reported) {
  const auto w = model_process_matrix(ModelParams::uq(90, 90));
  auto t = exact_counts(w, 10.0);
  t.by_setting.erase(5);
  t.by_setting.erase(17);
  EXPECT_FALSE(t.complete());
  EXPECT_EQ(t.missing_settings(), (std::vector<std::size_t>{5, 17}));
  EXPECT_THROW(t.frequencies(5), InputError);
}

TEST(protocol, every_basis_state_reachable_from_ground) {
  Eigen::Vector2cd ground(1.0, 0.0);
  for (BasisState target : kBasisStates) {
    bool found = false;
    for (Gate g : kGates) {
      found = found || std::norm(state_vector(target).dot(gate_unitary(g) * ground)) > 1.0 - 1e-12;
    }
    EXPECT_TRUE(found) << state_name(target);
  }
}

TEST(protocol, realized_preparation_table_closes) {
  EXPECT_EQ(realized_preparation(st("X+"), Gate::I, CollapseFrame::Eigenbasis), st("X+"));
  EXPECT_EQ(realized_preparation(st("Z+"), Gate::RX180), st("Z-"));
  for (auto frame : {CollapseFrame::Computational, CollapseFrame::Eigenbasis}) {
    for (BasisState b : kBasisStates) {
      for (Gate g : kGates) EXPECT_NO_THROW(realized_preparation(b, g, frame));
    }
  }
}

TEST(protocol, effect_operator_small_cases) {
  const auto z = st("Z+");
  Matrix expected = Matrix::Zero(16, 16);
  expected(0, 0) = 1.0;
  EXPECT_EQ(effect_operator({z, z, z, z}).matrix(), expected);
  EXPECT_LT(max_abs_diff(projector(st("Y+")).transpose(), projector(st("Y-"))), 1e-15);
  const auto w = ideal_process_matrix();
  EXPECT_NEAR((w.matrix() * effect_operator({z, z, z, z}).matrix()).trace().real(), 1.0, 1e-15);
}

TEST(protocol, effect_operators_are_product_projectors) {
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
      const auto e = effect_operator(shot_tuple(setting_at(i), k));
      EXPECT_GT(hermitian_eigenvalues(e.matrix()).minCoeff(), -1e-14);
      EXPECT_NEAR(e.trace().real(), 1.0, 1e-14);
      for (Label l : process_labels()) {
        LabelList rest;
        for (Label o : process_labels())
          if (o != l) rest.push_back(o);
        EXPECT_NEAR(partial_trace(e, rest).trace().real(), 1.0, 1e-14);
      }
    }
  }
}

TEST(protocol, ideal_process_distributions) {
  const auto w = ideal_process_matrix();
  const auto zz = born_distribution(w, {st("Z+"), Axis::Z, Gate::I, Axis::Z});
  EXPECT_NEAR(zz[0], 1.0, 1e-15);
  EXPECT_NEAR(zz[1] + zz[2] + zz[3], 0.0, 1e-15);
  const auto xx = born_distribution(w, {st("Z+"), Axis::X, Gate::I, Axis::X});
  for (double p : xx) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(protocol, sampled_frequencies_within_five_sigma) {
  const auto w = model_process_matrix(ModelParams::uq(97, 97));
  const std::int64_t shots = 1 << 14;
  const auto counts = sample_counts(w, shots, 2026);
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    const auto p = born_distribution(w, setting_at(i));
    const auto f = counts.frequencies(i);
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) {
      const double sigma = std::sqrt(p[k] * (1 - p[k]) / shots);
      EXPECT_LE(std::abs(f[k] - p[k]), 5 * sigma + 1e-12) << setting_name(setting_at(i));
    }
  }
}

TEST(protocol, relabeled_b_marginal_is_first_step_statistics) {
  // With reprep I, summing over C recovers the distribution of measuring B alone on the
  // first-step channel Tr_{B_O C_I} W / 2.
  const auto w = model_process_matrix(ModelParams::uq(97, 97));
  const auto first = partial_trace(w.op(), {Label::BO, Label::CI}) * cplx(0.5);
  for (BasisState a : kBasisStates) {
    for (Axis mb : kAxes) {
      for (Axis mc : kAxes) {
        const auto p = born_distribution(w, {a, mb, Gate::I, mc});
        const LabeledOperator e(
            {Label::AO, Label::BI},
            kron(projector(a).transpose(), projector({mb, Sign::Plus})));
        EXPECT_NEAR(p[0] + p[1], (first.matrix() * e.matrix()).trace().real(), 1e-12);
      }
    }
  }
}

TEST(protocol, full_experiment_shot_total) {
  const auto counts = sample_counts(ideal_process_matrix(), 1 << 14, 1);
  EXPECT_EQ(counts.total_shots(), 5308416.0);
  for (const auto& [i, c] : counts.by_setting) EXPECT_EQ(c.total(), 16384.0);
}

TEST(protocol, export_records_accumulate_into_counts) {
  const std::vector<ExportRecord> records = {
      {"X+", "Z", "RX90", "Y", "00", 5}, {"X+", "Z", "RX90", "Y", "01", 2},
      {"X+", "Z", "RX90", "Y", "10", 1}, {"X+", "Z", "RX90", "Y", "00", 2},
  };
  const auto t = counts_from_export(records, "job 17");
  EXPECT_EQ(t.shots_per_setting, 10.0);
  EXPECT_EQ(t.provenance, "job 17");
  EXPECT_FALSE(t.exact);
  const auto& c = t.by_setting.at(setting_index({parse_state("X+"), Axis::Z, Gate::RX90, Axis::Y}));
  EXPECT_EQ(c.counts[outcome_index(Sign::Plus, Sign::Plus)], 7.0);
  EXPECT_EQ(c.counts[outcome_index(Sign::Plus, Sign::Minus)], 2.0);
  EXPECT_EQ(c.counts[outcome_index(Sign::Minus, Sign::Plus)], 1.0);
  EXPECT_EQ(c.counts[outcome_index(Sign::Minus, Sign::Minus)], 0.0);
}

TEST(protocol, export_records_are_validated) {
  auto expect_rejected = [](const ExportRecord& r, const std::string& fragment) {
    try {
      counts_from_export({r}, "x");
      ADD_FAILURE() << "accepted " << r.bits;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_rejected({"X+", "Z", "I", "Y", "0", 1}, "bitstring");
  expect_rejected({"X+", "Z", "I", "Y", "0a", 1}, "bitstring");
  expect_rejected({"X+", "Z", "I", "Y", "00", -1}, "negative");
  expect_rejected({"X", "Z", "I", "Y", "00", 1}, "export record 0");
  expect_rejected({"X+", "Z", "RZ90", "Y", "00", 1}, "export record 0");
  EXPECT_THROW(counts_from_export({{"X+", "Z", "I", "Y", "00", 3}, {"Y+", "Z", "I", "Y", "00", 4}}, "x"), InputError);
}
