#include "overfitlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "overfitlab/bounds.hpp"
#include "overfitlab/gmm.hpp"
#include "overfitlab/max_margin.hpp"
#include "overfitlab/risk.hpp"
#include "overfitlab/trainer.hpp"
#include "overfitlab/util.hpp"

namespace overfitlab {

void VerifyParams::validate() const {
  if (trials == 0) {
    throw std::invalid_argument("VerifyParams: trials must be >= 1");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("VerifyParams: delta must be in (0, 1)");
  }
  if (mc_samples < 100) {
    throw std::invalid_argument("VerifyParams: mc_samples must be >= 100");
  }
  if (sgd_instances == 0) {
    throw std::invalid_argument("VerifyParams: sgd_instances must be >= 1");
  }
}

namespace {

// Fixed shapes for the concentration checkers. The claims are asymptotic in
// nothing: they hold for every n, so moderate sizes keep the battery fast
// while exercising the same formulas the risk analysis uses.
constexpr std::size_t kMaxCheckN = 100;
constexpr std::size_t kSumCheckN = 100;
constexpr std::size_t kSumCheckP = 200;
constexpr std::size_t kCountCheckN = 1000;
constexpr double kCountCheckRho = 0.4;

constexpr double kTransformRho = 0.25;
constexpr std::size_t kTransformP = 8;
constexpr double kTransformMuNorm = 2.5;

constexpr double kSgdGapTolerance = 0.005;
constexpr double kSgdAllowedFailFraction = 0.125;
constexpr double kSgdStepGrowth = 4.0;
constexpr std::size_t kSgdStages = 30;
constexpr std::size_t kSgdPerStage = 40000;

CheckOutcome transform_consistency_check(const VerifyParams& params,
                                         std::uint64_t seed) {
  GmmConfig config;
  config.p = kTransformP;
  config.mu = make_signal(kTransformP, kTransformMuNorm, SignalMode::axis);
  config.sigma = 1.0;

  // A fixed, deliberately misaligned classifier so both clean and noisy
  // risks sit away from 0 and 1.
  Weights w;
  w.w.assign(kTransformP, 0.0);
  Rng wrng(derive_seed(seed, 0));
  fill_gaussian(wrng, 1.0, w.w);
  w.w[0] += 0.5;

  const std::uint64_t draw_seed = derive_seed(seed, 1);
  Rng clean_rng(draw_seed);
  Rng noisy_rng(draw_seed);  // identical stream couples the two estimates
  const McEstimate clean = mc_risk(w, config, 0.0, params.mc_samples, clean_rng);
  const McEstimate noisy =
      mc_risk(w, config, kTransformRho, params.mc_samples, noisy_rng);

  const double predicted = noisy_risk(clean.estimate, kTransformRho);
  const double diff = std::fabs(noisy.estimate - predicted);
  const double scale = 1.0 - 2.0 * kTransformRho;
  const double combined_se =
      std::sqrt(noisy.std_err * noisy.std_err +
                scale * scale * clean.std_err * clean.std_err);

  CheckOutcome out;
  out.claim = "noisy_risk_transform";
  out.params = "rho=" + format_double(kTransformRho) +
               " m=" + std::to_string(params.mc_samples);
  out.bound = 3.0 * combined_se;
  out.frequency = diff;
  out.pass = diff <= out.bound;
  return out;
}

CheckOutcome sgd_vs_qp_check(const VerifyParams& params, std::uint64_t seed) {
  std::size_t failures = 0;
  for (std::size_t k = 0; k < params.sgd_instances; ++k) {
    Rng rng(derive_seed(seed, k));
    const std::size_t n = 4 + static_cast<std::size_t>(rng.next_uniform() * 13.0);
    const std::size_t span = 33 - n;
    const std::size_t p =
        n + static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(span));

    GmmConfig config;
    config.p = p;
    config.mu = make_signal(p, 3.0, SignalMode::axis);
    config.sigma = 1.0;
    const Dataset data = sample_noiseless(config, n, rng);

    bool ok = false;
    try {
      const MaxMarginSolution qp = solve_max_margin(data);
      if (qp.converged) {
        double max_sq = 0.0;
        for (const Sample& s : data.samples) {
          max_sq = std::max(max_sq, squared_norm(s.x));
        }
        const Weights final_w =
            run_staged_sgd(data, 1.0 / max_sq, kSgdStepGrowth, kSgdStages,
                           kSgdPerStage, rng);
        ok = direction_gap(final_w, qp.w) <= kSgdGapTolerance;
      }
    } catch (const InfeasibleError&) {
      ok = false;
    }
    if (!ok) ++failures;
  }
  CheckOutcome out;
  out.claim = "sgd_direction_matches_qp";
  out.params = "instances=" + std::to_string(params.sgd_instances) +
               " updates=" + std::to_string(kSgdStages * kSgdPerStage) +
               " gap<=" + format_double(kSgdGapTolerance);
  out.bound = kSgdAllowedFailFraction;
  out.frequency = static_cast<double>(failures) /
                  static_cast<double>(params.sgd_instances);
  out.pass = out.frequency <= out.bound;
  return out;
}

}  // namespace

VerificationReport run_verification(const VerifyParams& params) {
  params.validate();
  VerificationReport report;
  report.delta = params.delta;
  report.trials = params.trials;
  report.slack = 3.0 * std::sqrt(params.delta * (1.0 - params.delta) /
                                 static_cast<double>(params.trials));
  report.slack_warning = report.slack >= params.delta;
  const double freq_bound = params.delta + report.slack;

  {
    Rng rng(derive_seed(params.seed, 101));
    CheckOutcome out;
    out.claim = "max_abs_subgaussian";
    out.params = "n=" + std::to_string(kMaxCheckN) + " sigma=1 delta=" +
                 format_double(params.delta) +
                 " trials=" + std::to_string(params.trials);
    out.bound = freq_bound;
    out.frequency =
        check_max_subgaussian(kMaxCheckN, 1.0, params.delta, params.trials, rng);
    out.pass = out.frequency <= out.bound;
    report.checks.push_back(out);
  }
  {
    Rng rng(derive_seed(params.seed, 102));
    CheckOutcome out;
    out.claim = "noise_mean_norm";
    out.params = "n=" + std::to_string(kSumCheckN) + " p=" +
                 std::to_string(kSumCheckP) + " sigma=1 delta=" +
                 format_double(params.delta) +
                 " trials=" + std::to_string(params.trials);
    out.bound = freq_bound;
    out.frequency = check_noise_sum_norm(kSumCheckN, kSumCheckP, 1.0,
                                         params.delta, params.trials, rng);
    out.pass = out.frequency <= out.bound;
    report.checks.push_back(out);
  }
  {
    Rng rng(derive_seed(params.seed, 103));
    CheckOutcome out;
    out.claim = "flip_count_window";
    out.params = "n=" + std::to_string(kCountCheckN) + " rho=" +
                 format_double(kCountCheckRho) + " delta=" +
                 format_double(params.delta) +
                 " trials=" + std::to_string(params.trials);
    out.bound = freq_bound;
    out.frequency = check_noisy_count(kCountCheckN, kCountCheckRho,
                                      params.delta, params.trials, rng);
    out.pass = out.frequency <= out.bound;
    report.checks.push_back(out);
  }
  report.checks.push_back(
      transform_consistency_check(params, derive_seed(params.seed, 104)));
  report.checks.push_back(sgd_vs_qp_check(params, derive_seed(params.seed, 105)));

  report.all_pass = true;
  for (const CheckOutcome& c : report.checks) report.all_pass &= c.pass;
  return report;
}

std::string verification_json(const VerificationReport& report) {
  std::string out = "{\"all_pass\":";
  out += report.all_pass ? "true" : "false";
  out += ",\"checks\":[";
  for (std::size_t i = 0; i < report.checks.size(); ++i) {
    const CheckOutcome& c = report.checks[i];
    if (i > 0) out += ',';
    out += "{\"bound\":" + format_double(c.bound);
    out += ",\"claim\":\"" + c.claim + '"';
    out += ",\"frequency\":" + format_double(c.frequency);
    out += ",\"params\":\"" + c.params + '"';
    out += ",\"pass\":";
    out += c.pass ? "true" : "false";
    out += '}';
  }
  out += "],\"delta\":" + format_double(report.delta);
  out += ",\"slack\":" + format_double(report.slack);
  out += ",\"slack_warning\":";
  out += report.slack_warning ? "true" : "false";
  out += ",\"trials\":" + std::to_string(report.trials);
  out += '}';
  return out;
}

}  // namespace overfitlab
