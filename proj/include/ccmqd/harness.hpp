#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccmqd/io.hpp"

namespace ccmqd {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitPartial = 2 };

/// Worker count: CCMQD_THREADS when set to a positive integer, else the
/// hardware concurrency.
int pool_width();

inline const char* kReportHeader = "qubits,L_f,K_f,L_b,K_b,strategy,family,lambda,mean_fidelity,std,n_seeds,status";
inline const char* kLedgerHeader = "config_hash,qubits,family,strategy,lambda,mean,std,iters,wall_time";
inline const char* kBlochHeader = "step,x,y,z,purity";

struct ReportRow {
  TrainConfig config;
  double mean = 0.0;
  double std = 0.0;
  int n_seeds = 0;
  std::string status;  ///< ok, partial or failed
};

ReportRow report_row(const RunResult& run);
void write_report(std::ostream& os, const std::vector<ReportRow>& rows);
std::vector<std::vector<std::string>> read_csv(std::istream& is);

/// Appends one summary row, writing the header first when the file is new.
void append_ledger(const std::filesystem::path& path, const RunResult& run);

/// seed,iter,loss,F_0..F_{L_b} for every seed that recorded curves.
void write_curves_csv(std::ostream& os, const RunResult& run);

int cmd_run(const std::filesystem::path& config_path, std::ostream& log);
int cmd_sweep(const std::filesystem::path& sweep_path, const std::filesystem::path& report_path, std::ostream& log);
int cmd_verify(bool full, bool plant_fault, std::ostream& out);
/// Writes <stem>_forward.csv and <stem>_backward.csv next to `out`.
int cmd_export_bloch(const std::filesystem::path& result_path, const std::filesystem::path& out, std::ostream& log);
int cmd_export_curves(const std::filesystem::path& result_path, const std::filesystem::path& out, std::ostream& log);

/// The two file names cmd_export_bloch writes for `out`.
std::filesystem::path bloch_forward_path(const std::filesystem::path& out);
std::filesystem::path bloch_backward_path(const std::filesystem::path& out);

}  // namespace ccmqd
