#include "ccmqd/harness.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "ccmqd/csv.hpp"
#include "ccmqd/verify.hpp"

namespace ccmqd {

namespace fs = std::filesystem;

int pool_width() {
  if (const char* env = std::getenv("CCMQD_THREADS")) {
    int n = 0;
    const std::string_view s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && n > 0) return n;
  }
  return int(std::max(1u, std::thread::hardware_concurrency()));
}

ReportRow report_row(const RunResult& run) {
  ReportRow row{run.config, run.mean, run.std, 0, "ok"};
  for (const SeedResult& s : run.seeds)
    if (!s.failed) ++row.n_seeds;
  if (row.n_seeds == 0) row.status = "failed";
  else if (run.partial) row.status = "partial";
  return row;
}

void write_report(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << kReportHeader << '\n';
  CsvWriter w(os);
  for (const ReportRow& r : rows) {
    const TrainConfig& c = r.config;
    w.row(c.n_qubits, c.schedule.depth, c.schedule.kraus_count, c.backward_depth, c.backward_kraus,
          to_string(c.strategy), to_string(c.schedule.family), c.loss.lambda, r.mean, r.std, r.n_seeds, r.status);
  }
}

std::vector<std::vector<std::string>> read_csv(std::istream& is) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(split_csv_line(line));
  return rows;
}

void append_ledger(const fs::path& path, const RunResult& run) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to '" + path.string() + "'");
  if (fresh) out << kLedgerHeader << '\n';
  double iters = 0.0;
  int done = 0;
  for (const SeedResult& s : run.seeds)
    if (!s.failed) iters += s.iterations, ++done;
  const TrainConfig& c = run.config;
  CsvWriter(out).row(config_hash(c), c.n_qubits, to_string(c.schedule.family), to_string(c.strategy), c.loss.lambda,
                     run.mean, run.std, done ? iters / done : 0.0, run.wall_time);
}

void write_curves_csv(std::ostream& os, const RunResult& run) {
  const int lb = run.config.backward_depth;
  std::vector<std::string> header{"seed", "iter", "loss"};
  for (int t = 0; t <= lb; ++t) header.push_back("F_" + std::to_string(t));
  CsvWriter w(os);
  w.row_vector(header);
  for (const SeedResult& s : run.seeds) {
    for (std::size_t k = 0; k < s.loss_curve.size() && k < s.fidelity_curves.size(); ++k) {
      std::vector<std::string> fields{std::to_string(s.seed), std::to_string(k), format_double(s.loss_curve[k])};
      for (double f : s.fidelity_curves[k]) fields.push_back(format_double(f));
      w.row_vector(fields);
    }
  }
}

fs::path bloch_forward_path(const fs::path& out) {
  fs::path p = out;
  return p.replace_filename(out.stem().string() + "_forward.csv");
}

fs::path bloch_backward_path(const fs::path& out) {
  fs::path p = out;
  return p.replace_filename(out.stem().string() + "_backward.csv");
}

namespace {

const SeedResult* first_with_states(const RunResult& run) {
  for (const SeedResult& s : run.seeds)
    if (!s.failed && !s.forward_states.empty() && !s.backward_states.empty()) return &s;
  return nullptr;
}

void write_bloch_pair(const RunResult& run, const fs::path& out) {
  if (run.config.n_qubits != 1) throw ConfigError("bloch export needs a 1-qubit run");
  const SeedResult* s = first_with_states(run);
  if (!s) throw ConfigError("result has no stored trajectory (enable export.bloch)");

  std::vector<int> fwd_steps(s->forward_states.size());
  for (std::size_t t = 0; t < fwd_steps.size(); ++t) fwd_steps[t] = int(t);
  std::vector<DensityMatrix> bwd(s->backward_states.rbegin(), s->backward_states.rend());
  std::vector<int> bwd_steps(bwd.size());
  for (std::size_t i = 0; i < bwd.size(); ++i) bwd_steps[i] = int(bwd.size() - 1 - i);

  std::ostringstream f, b;
  write_bloch_csv(f, s->forward_states, fwd_steps);
  write_bloch_csv(b, bwd, bwd_steps);
  write_text_atomic(bloch_forward_path(out), f.str());
  write_text_atomic(bloch_backward_path(out), b.str());
}

Json channels_export(const RunResult& run) {
  Json seeds = Json::array();
  for (const SeedResult& s : run.seeds) {
    if (s.failed) continue;
    const SeedSetup setup = seed_setup(run.config, s.seed);
    Json fwd = Json::array();
    for (const Channel& ch : build_forward_sequence(setup.schedule, run.config.dim()))
      fwd.push_back(channel_to_json(ch, setup.schedule.family, setup.schedule.seed));
    Json js{{"seed", s.seed}, {"forward", std::move(fwd)}};
    if (s.model) js["backward"] = model_to_json(*s.model);
    seeds.push_back(std::move(js));
  }
  return {{"schema_version", kSchemaVersion}, {"seeds", std::move(seeds)}};
}

Json result_document(const RunResult& run, const std::string& note) {
  Json j = run_result_to_json(run);
  if (!note.empty()) j["note"] = note;
  return j;
}

void log_run(std::ostream& log, const std::string& label, const RunResult& run) {
  log << label << ": mean " << format_double(run.mean) << " std " << format_double(run.std) << " over "
      << report_row(run).n_seeds << "/" << run.seeds.size() << " seeds (" << format_double(run.wall_time) << " s)\n";
  for (const SeedResult& s : run.seeds)
    if (s.failed) log << "  seed " << s.seed << " failed: " << s.error << '\n';
}

}  // namespace

int cmd_run(const fs::path& config_path, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  cfg.train.keep_states = cfg.export_bloch || cfg.export_channels;
  if (!cfg.note.empty()) log << "note: " << cfg.note << '\n';

  const RunResult run = run_experiment(cfg.train, pool_width());
  log_run(log, config_path.filename().string(), run);

  const fs::path dir = cfg.output_dir;
  write_text_atomic(dir / "result.json", result_document(run, cfg.note).dump(1));
  append_ledger(dir / "ledger.csv", run);
  if (cfg.export_curves) {
    std::ostringstream os;
    write_curves_csv(os, run);
    write_text_atomic(dir / "curves.csv", os.str());
  }
  if (cfg.export_bloch) {
    if (cfg.train.n_qubits == 1) write_bloch_pair(run, dir / "bloch.csv");
    else log << "warning: bloch export skipped (run has " << cfg.train.n_qubits << " qubits)\n";
  }
  if (cfg.export_channels) write_text_atomic(dir / "channels.json", channels_export(run).dump(1));
  return run.partial ? kExitPartial : kExitOk;
}

int cmd_sweep(const fs::path& sweep_path, const fs::path& report_path, std::ostream& log) {
  std::vector<SweepCell> cells;
  try {
    cells = expand_sweep(read_json_file(sweep_path));
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const fs::path dir = cells.front().config.output_dir;
  const fs::path report = report_path.empty() ? dir / "report.csv" : report_path;
  if (!cells.front().config.note.empty()) log << "note: " << cells.front().config.note << '\n';
  log << sweep_path.filename().string() << ": " << cells.size() << " cells\n";

  std::vector<RunResult> runs(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        runs[i] = run_experiment(cells[i].config.train, 1);
      } catch (const std::exception& e) {
        runs[i].config = cells[i].config.train;
        runs[i].partial = true;
        errors[i] = e.what();
      }
    }
  };
  const int width = std::min<int>(pool_width(), int(cells.size()));
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
  }

  bool any_failed = false;
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string label = cells[i].label.empty() ? "cell " + std::to_string(i) : cells[i].label;
    if (!errors[i].empty()) log << label << ": failed: " << errors[i] << '\n';
    else log_run(log, label, runs[i]);
    char name[32];
    std::snprintf(name, sizeof(name), "cell_%03zu.json", i);
    write_text_atomic(dir / "cells" / name, result_document(runs[i], cells[i].config.note).dump(1));
    append_ledger(dir / "ledger.csv", runs[i]);
    ReportRow row = report_row(runs[i]);
    if (!errors[i].empty()) row.status = "failed";
    any_failed = any_failed || row.status != "ok";
    rows.push_back(std::move(row));
  }
  std::ostringstream os;
  write_report(os, rows);
  write_text_atomic(report, os.str());
  log << "report: " << report.string() << '\n';
  return any_failed ? kExitPartial : kExitOk;
}

int cmd_verify(bool full, bool plant_fault, std::ostream& out) {
  VerifyOptions opt;
  opt.trials = full ? 1000 : 50;
  opt.plant_fault = plant_fault;
  const std::vector<CheckResult> checks = run_verify_suite(opt);
  print_checks(out, checks);
  bool ok = true;
  for (const CheckResult& c : checks) ok = ok && c.pass;
  out << (ok ? "all checks passed" : "some checks FAILED") << '\n';
  return ok ? kExitOk : kExitPartial;
}

namespace {

RunResult load_result(const fs::path& path) { return run_result_from_json(read_json_file(path)); }

}  // namespace

int cmd_export_bloch(const fs::path& result_path, const fs::path& out, std::ostream& log) {
  try {
    write_bloch_pair(load_result(result_path), out);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  log << "wrote " << bloch_forward_path(out).string() << " and " << bloch_backward_path(out).string() << '\n';
  return kExitOk;
}

int cmd_export_curves(const fs::path& result_path, const fs::path& out, std::ostream& log) {
  try {
    const RunResult run = load_result(result_path);
    bool any = false;
    for (const SeedResult& s : run.seeds) any = any || !s.loss_curve.empty();
    if (!any) throw ConfigError("result has no recorded curves");
    std::ostringstream os;
    write_curves_csv(os, run);
    write_text_atomic(out, os.str());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  log << "wrote " << out.string() << '\n';
  return kExitOk;
}

}  // namespace ccmqd
