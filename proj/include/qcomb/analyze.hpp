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

#ifndef QCOMB_ANALYZE_HPP
#define QCOMB_ANALYZE_HPP

// Non-Markovianity metrics: distance to the Markovian reference (square-root
// Jensen-Shannon divergence), negativity across the (A_O B_I)|(B_O C_I) cut, and
// bootstrap credible intervals over resampled counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qcomb/errors.hpp"
#include "qcomb/io.hpp"
#include "qcomb/model.hpp"
#include "qcomb/parallel.hpp"
#include "qcomb/protocol.hpp"
#include "qcomb/qops.hpp"
#include "qcomb/random.hpp"
#include "qcomb/reconstruct.hpp"

namespace qcomb {

/// Scale at which entropies and negativity are evaluated.
enum class Normalization {
  /// Operators divided by their trace (density-operator form). sqrt(JSD) <= sqrt(ln 2).
  UnitTrace,
  /// Operators used at their native trace 4. Relative to UnitTrace this multiplies
  /// sqrt(JSD) by 2 and negativity by 4; it is the scale of the reference device-simulation maxima.
  ProcessTrace,
};

constexpr std::string_view normalization_name(Normalization n) noexcept {
  return n == Normalization::UnitTrace ? "unit-trace" : "process-trace";
}

inline Normalization parse_normalization(std::string_view s) {
  if (s == "unit-trace") return Normalization::UnitTrace;
  if (s == "process-trace") return Normalization::ProcessTrace;
  throw InputError("unknown normalization '" + std::string(s) + "'");
}

/// Eigenvalues below this magnitude are treated as zero in entropies and negativity sums.
inline constexpr double kMetricEigenvalueFloor = 1e-12;

namespace detail {

inline void require_process_trace(const ProcessMatrix& w, const char* who) {
  if (std::abs(w.trace() - 4.0) > 1e-6) {
    throw InputError(std::string(who) + ": process matrix trace " + io::format_short(w.trace()) +
                     " differs from 4");
  }
}

}  // namespace detail

/// (Tr_{B_O C_I} W / 2) (x) (Tr_{A_O B_I} W / 2): the product of the two single-step channels.
inline ProcessMatrix markovian_reference(const ProcessMatrix& w) {
  detail::require_process_trace(w, "markovian_reference");
  auto first = partial_trace(w.op(), {Label::BO, Label::CI});
  auto second = partial_trace(w.op(), {Label::AO, Label::BI});
  first *= 0.5;
  second *= 0.5;
  return {tensor(first, second), w.status()};
}

/// -Tr[rho ln rho] over eigenvalues above the floor.
inline double von_neumann_entropy(const Matrix& rho) {
  const Eigen::VectorXd lambda = hermitian_eigenvalues(rho, 1e-8);
  double h = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > kMetricEigenvalueFloor) h -= lambda(i) * std::log(lambda(i));
  }
  return h;
}

/// H((a+b)/2) - (H(a) + H(b))/2 with the natural log. Arguments are positive semidefinite
/// (eigenvalues >= -1e-6) and are trace-normalized first under UnitTrace.
inline double jensen_shannon_divergence(const Matrix& a, const Matrix& b,
                                        Normalization norm = Normalization::UnitTrace) {
  for (const Matrix* m : {&a, &b}) {
    if (hermitian_eigenvalues(*m, 1e-8)(0) < -1e-6) {
      throw InputError("jensen_shannon_divergence: argument has a negative eigenvalue below -1e-6");
    }
  }
  Matrix ra = a;
  Matrix rb = b;
  if (norm == Normalization::UnitTrace) {
    ra /= a.trace().real();
    rb /= b.trace().real();
  }
  const Matrix mid = 0.5 * (ra + rb);
  double jsd = von_neumann_entropy(mid) - 0.5 * (von_neumann_entropy(ra) + von_neumann_entropy(rb));
  const double scale = 0.5 * (ra.trace().real() + rb.trace().real());
  const double bound = scale * std::numbers::ln2;
  if (jsd < -1e-9 || jsd > bound + 1e-9) {
    throw InternalError("Jensen-Shannon divergence " + io::format_double(jsd) + " outside [0, " +
                        io::format_double(bound) + "]");
  }
  return std::clamp(jsd, 0.0, bound);
}

inline double sqrt_jsd(const Matrix& a, const Matrix& b, Normalization norm = Normalization::UnitTrace) {
  return std::sqrt(jensen_shannon_divergence(a, b, norm));
}

inline double sqrt_jsd(const ProcessMatrix& w1, const ProcessMatrix& w2,
                       Normalization norm = Normalization::UnitTrace) {
  detail::require_process_trace(w1, "sqrt_jsd");
  detail::require_process_trace(w2, "sqrt_jsd");
  return sqrt_jsd(w1.matrix(), w2.matrix(), norm);
}

/// Sum of |negative eigenvalues| of the partial transpose over `transposed`.
inline double negativity(const LabeledOperator& w, const LabelList& transposed,
                         Normalization norm = Normalization::UnitTrace) {
  LabeledOperator rho = partial_transpose(w, transposed);
  if (norm == Normalization::UnitTrace) rho *= cplx(1.0 / w.trace().real());
  const Eigen::VectorXd lambda = hermitian_eigenvalues(rho.matrix(), 1e-8);
  double n = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -kMetricEigenvalueFloor) n -= lambda(i);
  }
  return n;
}

/// Negativity across (A_O B_I)|(B_O C_I), transposing the earlier pair.
inline double negativity(const ProcessMatrix& w, Normalization norm = Normalization::UnitTrace) {
  detail::require_process_trace(w, "negativity");
  return negativity(w.op(), {Label::AO, Label::BI}, norm);
}

struct Metrics {
  double sqrt_jsd = 0.0;
  double negativity = 0.0;
};

inline Metrics non_markovianity(const ProcessMatrix& w, Normalization norm = Normalization::UnitTrace) {
  return {sqrt_jsd(w, markovian_reference(w), norm), negativity(w, norm)};
}

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapOptions {
  int trials = 1000;
  int resample_shots = 8000;
  std::uint64_t seed = 0;
  double max_failure_fraction = 0.05;
  unsigned workers = default_workers();
};

struct BootstrapEstimate {
  double point = 0.0;   ///< statistic on the original data
  double mean = 0.0;    ///< mean over successful trials
  double stddev = 0.0;  ///< sample standard deviation over trials
  double ci95 = 0.0;    ///< 2 * stddev
  double bias = 0.0;    ///< mean - point (reported, not corrected)
};

struct BootstrapSummary {
  std::vector<BootstrapEstimate> estimates;  ///< one per statistic component
  int trials = 0;
  int failed = 0;
};

/// Multinomial resample of every setting at `shots` draws from its observed frequencies.
inline CountsTable resample_counts(const CountsTable& counts, std::int64_t shots, Rng& rng) {
  CountsTable out;
  out.shots_per_setting = static_cast<double>(shots);
  out.seed = counts.seed;
  out.frame = counts.frame;
  out.provenance = counts.provenance;
  for (const auto& [index, c] : counts.by_setting) {
    if (c.total() <= 0.0) continue;
    OutcomeProbabilities f{};
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) f[k] = c.counts[k] / c.total();
    const auto draw = multinomial(shots, f, rng);
    SettingCounts& r = out.by_setting[index];
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) r.counts[k] = static_cast<double>(draw[k]);
  }
  return out;
}

/// Non-parametric bootstrap of a vector-valued statistic of a counts table. Trial i
/// draws from its own stream, so results do not depend on the worker count. Trials
/// whose statistic throws are skipped; more than `max_failure_fraction` of them is an error.
template <class Statistic>
BootstrapSummary bootstrap(const CountsTable& counts, Statistic&& statistic, const BootstrapOptions& opts) {
  if (opts.trials < 2) throw UsageError("bootstrap needs at least 2 trials", "bootstrap_trials");
  if (opts.resample_shots < 1) {
    throw UsageError("bootstrap_resample_shots must be positive", "bootstrap_resample_shots");
  }
  const std::vector<double> point = statistic(counts);
  struct Trial {
    bool ok = false;
    std::vector<double> values;
  };
  const auto trials = parallel_map<Trial>(
      static_cast<std::size_t>(opts.trials),
      [&](std::size_t i) {
        Rng rng = derive_rng(opts.seed, /*stream=*/2, i);
        try {
          return Trial{true, statistic(resample_counts(counts, opts.resample_shots, rng))};
        } catch (const std::exception&) {
          return Trial{};
        }
      },
      opts.workers);

  BootstrapSummary out;
  out.trials = opts.trials;
  std::vector<double> sum(point.size(), 0.0), sum_sq(point.size(), 0.0);
  int ok = 0;
  for (const Trial& t : trials) {
    if (!t.ok || t.values.size() != point.size()) {
      ++out.failed;
      continue;
    }
    ++ok;
    for (std::size_t m = 0; m < point.size(); ++m) sum[m] += t.values[m];
  }
  if (out.failed > opts.max_failure_fraction * opts.trials || ok < 2) {
    throw InputError("bootstrap: " + std::to_string(out.failed) + " of " + std::to_string(opts.trials) +
                     " trials failed");
  }
  std::vector<double> mean(point.size());
  for (std::size_t m = 0; m < point.size(); ++m) mean[m] = sum[m] / ok;
  for (const Trial& t : trials) {
    if (!t.ok || t.values.size() != point.size()) continue;
    for (std::size_t m = 0; m < point.size(); ++m) sum_sq[m] += (t.values[m] - mean[m]) * (t.values[m] - mean[m]);
  }
  for (std::size_t m = 0; m < point.size(); ++m) {
    BootstrapEstimate e;
    e.point = point[m];
    e.mean = mean[m];
    e.stddev = std::sqrt(sum_sq[m] / (ok - 1));
    e.ci95 = 2.0 * e.stddev;
    e.bias = e.mean - e.point;
    out.estimates.push_back(e);
  }
  return out;
}

/// Settings of the counts -> estimate -> physical projection -> metric chain.
struct PipelineOptions {
  InversionOptions inversion;
  ProjectionOptions projection;
  Normalization normalization = Normalization::UnitTrace;
};

/// Metrics of the physical reconstruction of a counts table.
inline Metrics metrics_from_counts(const CountsTable& counts, const PipelineOptions& opts = {}) {
  const auto raw = invert_counts(counts, opts.inversion);
  const auto phys = project_physical(raw, opts.projection);
  return non_markovianity(phys.w, opts.normalization);
}

enum class Metric { SqrtJsd, Negativity };

/// Bootstrap of both metrics through the full reconstruction; estimates[0] is sqrt(JSD),
/// estimates[1] negativity.
inline BootstrapSummary bootstrap_metrics(const CountsTable& counts, const BootstrapOptions& opts,
                                          const PipelineOptions& pipeline = {}) {
  return bootstrap(
      counts,
      [&](const CountsTable& c) {
        const Metrics m = metrics_from_counts(c, pipeline);
        return std::vector<double>{m.sqrt_jsd, m.negativity};
      },
      opts);
}

inline BootstrapEstimate bootstrap_ci(const CountsTable& counts, Metric metric, const BootstrapOptions& opts,
                                      const PipelineOptions& pipeline = {}) {
  const auto summary = bootstrap(
      counts,
      [&](const CountsTable& c) {
        const Metrics m = metrics_from_counts(c, pipeline);
        return std::vector<double>{metric == Metric::SqrtJsd ? m.sqrt_jsd : m.negativity};
      },
      opts);
  return summary.estimates.front();
}

// ---------------------------------------------------------------------------
// Reports

struct MetricsReport {
  double sqrt_jsd = 0.0;
  double negativity = 0.0;
  double sqrt_jsd_ci95 = 0.0;
  double negativity_ci95 = 0.0;
  double sqrt_jsd_bias = 0.0;
  double negativity_bias = 0.0;
  double t1_ns = 0.0;
  double t2_ns = 0.0;
  Normalization normalization = Normalization::UnitTrace;
  int bootstrap_trials = 0;  ///< 0 when no intervals were computed
  int bootstrap_failed = 0;
  std::string provenance;

  bool operator==(const MetricsReport&) const = default;
};

inline void write_metrics_report(std::ostream& out, const MetricsReport& r) {
  out << "qcomb-metrics v1\n"
      << "sqrt_jsd " << io::format_double(r.sqrt_jsd) << '\n'
      << "negativity " << io::format_double(r.negativity) << '\n'
      << "sqrt_jsd_ci95 " << io::format_double(r.sqrt_jsd_ci95) << '\n'
      << "negativity_ci95 " << io::format_double(r.negativity_ci95) << '\n'
      << "sqrt_jsd_bias " << io::format_double(r.sqrt_jsd_bias) << '\n'
      << "negativity_bias " << io::format_double(r.negativity_bias) << '\n'
      << "t1_ns " << io::format_double(r.t1_ns) << '\n'
      << "t2_ns " << io::format_double(r.t2_ns) << '\n'
      << "normalization " << normalization_name(r.normalization) << '\n'
      << "bootstrap_trials " << r.bootstrap_trials << '\n'
      << "bootstrap_failed " << r.bootstrap_failed << '\n'
      << "provenance " << r.provenance << '\n'
      << "end\n";
}

inline MetricsReport read_metrics_report(std::istream& in) {
  MetricsReport r;
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return "metrics report line " + std::to_string(lineno); };
  if (!std::getline(in, line) || io::trim(line) != "qcomb-metrics v1") {
    throw InputError("metrics report: bad header");
  }
  ++lineno;
  bool ended = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto l = io::trim(line);
    if (l.empty()) continue;
    if (l == "end") {
      ended = true;
      break;
    }
    const auto sp = l.find(' ');
    const auto key = l.substr(0, sp);
    const auto value = sp == std::string_view::npos ? std::string_view{} : io::trim(l.substr(sp));
    if (key == "sqrt_jsd") r.sqrt_jsd = io::parse_double(value, where());
    else if (key == "negativity") r.negativity = io::parse_double(value, where());
    else if (key == "sqrt_jsd_ci95") r.sqrt_jsd_ci95 = io::parse_double(value, where());
    else if (key == "negativity_ci95") r.negativity_ci95 = io::parse_double(value, where());
    else if (key == "sqrt_jsd_bias") r.sqrt_jsd_bias = io::parse_double(value, where());
    else if (key == "negativity_bias") r.negativity_bias = io::parse_double(value, where());
    else if (key == "t1_ns") r.t1_ns = io::parse_double(value, where());
    else if (key == "t2_ns") r.t2_ns = io::parse_double(value, where());
    else if (key == "normalization") r.normalization = parse_normalization(value);
    else if (key == "bootstrap_trials") r.bootstrap_trials = static_cast<int>(io::parse_int(value, where()));
    else if (key == "bootstrap_failed") r.bootstrap_failed = static_cast<int>(io::parse_int(value, where()));
    else if (key == "provenance") r.provenance = std::string(value);
    else throw InputError(where() + ": unknown key '" + std::string(key) + "'");
  }
  if (!ended) throw InputError("metrics report: missing 'end'");
  return r;
}

inline void write_metrics_csv_header(std::ostream& out) { out << "t1_ns,t2_ns,sqrt_jsd,negativity\n"; }

inline void write_metrics_csv_row(std::ostream& out, const MetricsReport& r) {
  out << io::format_double(r.t1_ns) << ',' << io::format_double(r.t2_ns) << ','
      << io::format_double(r.sqrt_jsd) << ',' << io::format_double(r.negativity) << '\n';
}

inline std::string model_provenance(const ModelParams& p) {
  return "model omega1_ghz=" + io::format_short(p.omega1_ghz) + " omega2_ghz=" + io::format_short(p.omega2_ghz) +
         " g12_mhz=" + io::format_short(p.g12_mhz) + " t1_ns=" + io::format_short(p.t1_ns) +
         " t2_ns=" + io::format_short(p.t2_ns) + " angular_factor=" + io::format_double(p.angular_factor);
}

/// Exact (no sampling) metrics of the model over a (t1, t2) grid, t1-major.
inline std::vector<MetricsReport> landscape_scan(const ModelParams& base, const std::vector<double>& t1_grid,
                                                 const std::vector<double>& t2_grid,
                                                 Normalization norm = Normalization::UnitTrace,
                                                 unsigned workers = default_workers()) {
  if (t1_grid.empty() || t2_grid.empty()) throw UsageError("scan grids must be non-empty", "scan_t1_ns");
  base.validate();
  const std::size_t n2 = t2_grid.size();
  return parallel_map<MetricsReport>(
      t1_grid.size() * n2,
      [&](std::size_t i) {
        ModelParams p = base;
        p.t1_ns = t1_grid[i / n2];
        p.t2_ns = t2_grid[i % n2];
        const Metrics m = non_markovianity(model_process_matrix(p), norm);
        MetricsReport r;
        r.sqrt_jsd = m.sqrt_jsd;
        r.negativity = m.negativity;
        r.t1_ns = p.t1_ns;
        r.t2_ns = p.t2_ns;
        r.normalization = norm;
        r.provenance = model_provenance(p);
        return r;
      },
      workers);
}

}  // namespace qcomb

#endif  // QCOMB_ANALYZE_HPP
