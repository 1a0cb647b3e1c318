#include <iostream>

#include <CLI11.hpp>

#include "ccmqd/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Channel-constrained quantum diffusion: training runs, sweeps and checks"};
  app.require_subcommand(1);

  std::string config, sweep, report, result, out;
  bool full = false, plant_fault = false;

  auto* run = app.add_subcommand("run", "Train every seed of one experiment config");
  run->add_option("config", config, "Experiment JSON")->required();

  auto* sw = app.add_subcommand("sweep", "Run a grid of configs and write a report table");
  sw->add_option("sweep", sweep, "Sweep JSON")->required();
  sw->add_option("-o,--report", report, "Report CSV (default <output_dir>/report.csv)");

  auto* verify = app.add_subcommand("verify", "Run the invariant checklist");
  verify->add_flag("--full", full, "1000 random trials per property instead of 50");
  verify->add_flag("--plant-fault", plant_fault, "Include a corrupted Kraus set in the CPTP check");

  auto* bloch = app.add_subcommand("export-bloch", "Bloch coordinates of a 1-qubit run");
  bloch->add_option("result", result, "result.json")->required();
  bloch->add_option("out", out, "Output CSV; writes <stem>_forward.csv and <stem>_backward.csv")->required();

  auto* curves = app.add_subcommand("export-curves", "Loss and per-step fidelity curves");
  curves->add_option("result", result, "result.json")->required();
  curves->add_option("out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ccmqd::kExitOk : ccmqd::kExitConfig;
  }

  try {
    if (*run) return ccmqd::cmd_run(config, std::cerr);
    if (*sw) return ccmqd::cmd_sweep(sweep, report, std::cerr);
    if (*verify) return ccmqd::cmd_verify(full, plant_fault, std::cout);
    if (*bloch) return ccmqd::cmd_export_bloch(result, out, std::cerr);
    if (*curves) return ccmqd::cmd_export_curves(result, out, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ccmqd::kExitConfig;
  }
  return ccmqd::kExitConfig;
}
