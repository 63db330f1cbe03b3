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


// qcomb: simulate, sample, reconstruct and analyze two-step quantum combs.
//
//   qcomb simulate    --config uq.cfg --out run/
//   qcomb sample      --config uq.cfg --seed 7 [--exact] --out run/
//   qcomb reconstruct --config uq.cfg --counts run/counts.txt --out run/
//   qcomb analyze     --config uq.cfg --counts run/counts.txt --out run/
//   qcomb analyze     --process run/process_physical.txt --no-bootstrap
//   qcomb scan        --config uq.cfg --out run/
//
// Exit status: 0 success, 2 usage error, 3 input-data error, 4 projection did not converge.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qcomb/qcomb.hpp"

namespace fs = std::filesystem;
using namespace qcomb;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNotConverged = 4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string counts;
  std::string process;
  bool exact = false;
  bool no_bootstrap = false;
};

RunConfig load(const Flags& f, bool required) {
  RunConfig c;
  if (!f.config.empty()) {
    c = load_config(f.config);
  } else if (required) {
    throw UsageError("--config is required for this command", "config");
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.output_dir = f.out;
  return c;
}

fs::path output_path(const RunConfig& c, const char* name) {
  const fs::path dir = c.output_dir.empty() ? fs::path(".") : fs::path(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir / name;
}

Metadata model_metadata(const ModelParams& p, ProcessStatus status) {
  return {{"status", std::string(status_name(status))},
          {"omega1_ghz", io::format_double(p.omega1_ghz)},
          {"omega2_ghz", io::format_double(p.omega2_ghz)},
          {"g12_mhz", io::format_double(p.g12_mhz)},
          {"t1_ns", io::format_double(p.t1_ns)},
          {"t2_ns", io::format_double(p.t2_ns)},
          {"angular_factor", io::format_double(p.angular_factor)}};
}

void write_process(const fs::path& path, const ProcessMatrix& w, const Metadata& meta) {
  io::atomic_write(path, [&](std::ostream& out) { write_operator(out, w.op(), meta); });
}

void write_report(const fs::path& path, const CombConstraintReport& r) {
  io::atomic_write(path, [&](std::ostream& out) { write_constraint_report(out, r); });
}

CountsTable read_counts_file(const std::string& path) {
  auto in = io::open_input(path);
  try {
    return read_counts(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

ProcessMatrix read_process_file(const std::string& path) {
  auto in = io::open_input(path);
  try {
    auto file = read_operator(in);
    const auto it = file.meta.find("status");
    const ProcessStatus status = it == file.meta.end() ? ProcessStatus::RawReconstruction : parse_status(it->second);
    return {std::move(file.op), status};
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const DomainError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string counts_source(const Flags& f, const RunConfig& c) { return f.counts.empty() ? c.input : f.counts; }

int cmd_simulate(const Flags& f) {
  const RunConfig c = load(f, true);
  const auto w = model_process_matrix(c.model);
  const auto report = constraint_report(w);
  const auto wpath = output_path(c, "process_model.txt");
  write_process(wpath, w, model_metadata(c.model, w.status()));
  write_report(output_path(c, "constraints_model.txt"), report);
  std::cout << "model process matrix: " << wpath.string() << '\n'
            << "  trace " << io::format_short(w.trace()) << ", worst constraint violation "
            << io::format_short(report.worst()) << '\n';
  return 0;
}

int cmd_sample(const Flags& f) {
  const RunConfig c = load(f, true);
  const auto w = model_process_matrix(c.model);
  CountsTable t = f.exact ? exact_counts(w, static_cast<double>(c.shots), c.noise, c.frame)
                          : sample_counts(w, c.shots, c.seed, c.noise, c.frame);
  t.provenance = model_provenance(c.model);
  const auto path = output_path(c, "counts.txt");
  io::atomic_write(path, [&](std::ostream& out) { write_counts(out, t); });
  std::cout << (f.exact ? "exact-probability" : "sampled") << " counts: " << path.string() << '\n'
            << "  " << kNumSettings << " settings x " << c.shots << " shots = "
            << io::format_short(t.total_shots()) << " shots\n";
  return 0;
}

int cmd_reconstruct(const Flags& f) {
  const RunConfig c = load(f, false);
  const std::string src = counts_source(f, c);
  if (src.empty()) throw UsageError("reconstruct needs --counts or an input key in the config", "counts");
  const CountsTable counts = read_counts_file(src);
  const auto raw = invert_counts(counts, c.pipeline.inversion);
  const auto res = project_physical(raw, c.pipeline.projection);
  Metadata raw_meta = {{"status", std::string(status_name(raw.status()))}, {"source", src}};
  Metadata phys_meta = {{"status", std::string(status_name(res.w.status()))},
                        {"source", src},
                        {"distance", io::format_double(res.distance)},
                        {"iterations", std::to_string(res.iterations)},
                        {"converged", res.converged ? "true" : "false"}};
  write_process(output_path(c, "process_raw.txt"), raw, raw_meta);
  write_process(output_path(c, "process_physical.txt"), res.w, phys_meta);
  write_report(output_path(c, "constraints_raw.txt"), constraint_report(raw));
  write_report(output_path(c, "constraints_physical.txt"), res.report);
  std::cout << "reconstructed from " << src << '\n'
            << "  projection distance " << io::format_short(res.distance) << " after " << res.iterations
            << " iterations, worst constraint violation " << io::format_short(res.report.worst()) << '\n';
  if (!res.converged) {
    std::cerr << "warning: projection did not converge within " << c.pipeline.projection.max_iter
              << " iterations\n";
    return kExitNotConverged;
  }
  return 0;
}

int cmd_analyze(const Flags& f) {
  const RunConfig c = load(f, false);
  const std::string src = counts_source(f, c);
  if (!f.process.empty() && !f.counts.empty()) {
    throw UsageError("give either --counts or --process, not both", "process");
  }
  MetricsReport r;
  r.normalization = c.pipeline.normalization;
  bool converged = true;
  if (!f.process.empty()) {
    if (!f.no_bootstrap) {
      throw UsageError("credible intervals need counts; pass --no-bootstrap to analyze a process matrix", "process");
    }
    auto w = read_process_file(f.process);
    if (w.status() == ProcessStatus::RawReconstruction) {
      auto res = project_physical(w, c.pipeline.projection);
      converged = res.converged;
      w = res.w;
    }
    const Metrics m = non_markovianity(w, c.pipeline.normalization);
    r.sqrt_jsd = m.sqrt_jsd;
    r.negativity = m.negativity;
    r.provenance = "process " + f.process;
  } else {
    if (src.empty()) throw UsageError("analyze needs --counts, --process or an input key in the config", "counts");
    const CountsTable counts = read_counts_file(src);
    const auto raw = invert_counts(counts, c.pipeline.inversion);
    const auto res = project_physical(raw, c.pipeline.projection);
    converged = res.converged;
    const Metrics m = non_markovianity(res.w, c.pipeline.normalization);
    r.sqrt_jsd = m.sqrt_jsd;
    r.negativity = m.negativity;
    r.provenance = "counts " + src + (counts.provenance.empty() ? "" : " (" + counts.provenance + ")");
    if (!f.no_bootstrap) {
      const auto s = bootstrap_metrics(counts, c.bootstrap_options(), c.pipeline);
      r.sqrt_jsd_ci95 = s.estimates[0].ci95;
      r.negativity_ci95 = s.estimates[1].ci95;
      r.sqrt_jsd_bias = s.estimates[0].bias;
      r.negativity_bias = s.estimates[1].bias;
      r.bootstrap_trials = s.trials;
      r.bootstrap_failed = s.failed;
    }
  }
  r.t1_ns = c.model.t1_ns;
  r.t2_ns = c.model.t2_ns;
  const auto path = output_path(c, "metrics.txt");
  io::atomic_write(path, [&](std::ostream& out) { write_metrics_report(out, r); });
  std::cout << "metrics (" << normalization_name(r.normalization) << "): " << path.string() << '\n';
  std::cout << "  sqrt(JSD)   " << io::format_short(r.sqrt_jsd);
  if (r.bootstrap_trials) std::cout << " +- " << io::format_short(r.sqrt_jsd_ci95);
  std::cout << "\n  negativity  " << io::format_short(r.negativity);
  if (r.bootstrap_trials) std::cout << " +- " << io::format_short(r.negativity_ci95);
  std::cout << '\n';
  if (!converged) {
    std::cerr << "warning: projection did not converge; metrics use the last iterate\n";
    return kExitNotConverged;
  }
  return 0;
}

int cmd_scan(const Flags& f) {
  const RunConfig c = load(f, true);
  if (c.scan_t1_ns.empty() || c.scan_t2_ns.empty()) {
    throw UsageError("scan needs scan_t1_ns and scan_t2_ns in the config", "scan_t1_ns");
  }
  const auto rows = landscape_scan(c.model, c.scan_t1_ns, c.scan_t2_ns, c.pipeline.normalization);
  auto by = [](double MetricsReport::*field) {
    return [field](const MetricsReport& a, const MetricsReport& b) { return a.*field < b.*field; };
  };
  const auto best_jsd = std::max_element(rows.begin(), rows.end(), by(&MetricsReport::sqrt_jsd));
  const auto best_neg = std::max_element(rows.begin(), rows.end(), by(&MetricsReport::negativity));
  const auto path = output_path(c, "scan.csv");
  io::atomic_write(path, [&](std::ostream& out) {
    write_metrics_csv_header(out);
    for (const auto& r : rows) write_metrics_csv_row(out, r);
    out << "# normalization " << normalization_name(c.pipeline.normalization) << '\n';
    out << "# argmax sqrt_jsd\n# ";
    write_metrics_csv_row(out, *best_jsd);
    out << "# argmax negativity\n# ";
    write_metrics_csv_row(out, *best_neg);
  });
  std::cout << "scan of " << rows.size() << " points: " << path.string() << '\n'
            << "  max sqrt(JSD) " << io::format_short(best_jsd->sqrt_jsd) << " at (" << io::format_short(best_jsd->t1_ns)
            << ", " << io::format_short(best_jsd->t2_ns) << ") ns\n"
            << "  max negativity " << io::format_short(best_neg->negativity) << " at ("
            << io::format_short(best_neg->t1_ns) << ", " << io::format_short(best_neg->t2_ns) << ") ns\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate, sample, reconstruct and analyze two-step quantum combs"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "Run configuration (key = value)");
    sub->add_option("--seed", f.seed, "Random seed (overrides the config)");
    sub->add_option("--out", f.out, "Output directory (overrides the config)");
  };
  auto* simulate = app.add_subcommand("simulate", "Write the model process matrix and its constraint report");
  auto* sample = app.add_subcommand("sample", "Write tomography counts for all 324 settings");
  auto* reconstruct = app.add_subcommand("reconstruct", "Invert counts and project onto valid process matrices");
  auto* analyze = app.add_subcommand("analyze", "Non-Markovianity metrics with bootstrap credible intervals");
  auto* scan = app.add_subcommand("scan", "Exact metrics of the model over a (t1, t2) grid");
  for (auto* sub : {simulate, sample, reconstruct, analyze, scan}) common(sub);
  sample->add_flag("--exact", f.exact, "Infinite-shot frequencies instead of sampled counts");
  reconstruct->add_option("--counts", f.counts, "Counts file");
  analyze->add_option("--counts", f.counts, "Counts file");
  analyze->add_option("--process", f.process, "Process-matrix file (requires --no-bootstrap)");
  analyze->add_flag("--no-bootstrap", f.no_bootstrap, "Skip credible intervals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(f);
    if (*sample) return cmd_sample(f);
    if (*reconstruct) return cmd_reconstruct(f);
    if (*analyze) return cmd_analyze(f);
    if (*scan) return cmd_scan(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
