#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccmqd/training.hpp"

namespace ccmqd {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;  ///< worst value seen
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  /// Random trials per property (50 fast, 1000 full); each check caps it at
  /// its own nominal count.
  int trials = 50;
  std::uint64_t seed = 20240601;
  /// Adds a Kraus set with one extra identity operator to the CPTP check.
  bool plant_fault = false;
};

CheckResult check_cptp(const VerifyOptions& opt);
CheckResult check_stinespring(const VerifyOptions& opt);
CheckResult check_gradient(const VerifyOptions& opt);
CheckResult check_cayley_drift(const VerifyOptions& opt);
CheckResult check_fidelity_axioms(const VerifyOptions& opt);
CheckResult check_lindblad_order(const VerifyOptions& opt);

/// Stored two-qubit HQTO+PC regression run used for the intermediate-fidelity
/// trade-off check.
TrainConfig tradeoff_regression_config();

/// Intermediate step t (0 < t < L_b) whose fidelity curve both rises and
/// falls by more than `delta`, or -1.
int non_monotone_step(const SeedResult& seed, double delta = 1e-6);

/// Intermediate step whose fidelity ends below its starting value, or -1.
int decreasing_step(const SeedResult& seed);

CheckResult check_tradeoff(const VerifyOptions& opt);

std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt);

/// One line per check: "PASS|FAIL  name  measured=... threshold=...  detail".
void print_checks(std::ostream& os, const std::vector<CheckResult>& checks);

}  // namespace ccmqd
