#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace overfitlab {

struct VerifyParams {
  std::size_t trials = 2000;   // Monte Carlo repetitions per claim checker
  double delta = 0.05;         // claimed failure probability under test
  std::uint64_t seed = 1;
  std::size_t mc_samples = 100000;  // draws for the risk transform test
  std::size_t sgd_instances = 8;    // instances in the SGD-vs-QP battery

  void validate() const;  // throws std::invalid_argument
};

// One line of the battery. Every check passes iff frequency <= bound; the
// two fields carry check-specific meanings (violation frequency vs claimed
// probability plus sampling slack for the concentration claims, observed
// discrepancy vs tolerance for the agreement checks).
struct CheckOutcome {
  std::string claim;
  std::string params;
  double bound = 0.0;
  double frequency = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<CheckOutcome> checks;
  double delta = 0.0;
  std::size_t trials = 0;
  double slack = 0.0;  // 3 sqrt(delta (1-delta) / trials)
  // Set when the sampling slack is at least as large as delta itself, i.e.
  // the trial count is too small for the frequency comparison to mean much.
  bool slack_warning = false;
  bool all_pass = false;
};

// Runs the three concentration checkers, the noisy-risk transform
// consistency test, and the SGD-vs-QP direction battery. Deterministic
// given params.
VerificationReport run_verification(const VerifyParams& params);

// Stable-key JSON document for the report.
std::string verification_json(const VerificationReport& report);

}  // namespace overfitlab
