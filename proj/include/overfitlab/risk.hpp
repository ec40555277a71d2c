#pragma once

#include <cstddef>
#include <string>

#include "overfitlab/gmm.hpp"
#include "overfitlab/linear_model.hpp"
#include "overfitlab/rng.hpp"

namespace overfitlab {

// Standard normal CDF, accurate in both tails (built on erfc, not erf).
double normal_cdf(double z);

// Clean test error of sign(w . x) on the symmetric two-cluster model with
// isotropic Gaussian noise: Phi(-(mu . w) / (sigma * |w|)). Requires a
// nonzero classifier and sigma > 0.
double closed_form_risk(const Weights& w, const std::vector<double>& mu,
                        double sigma);

// Error against rho-flipped labels given the clean error:
// rho + (1 - 2 rho) * clean. Requires clean in [0,1] and rho in [0, 0.5].
double noisy_risk(double clean_risk, double rho);

// closed_form_risk(w) minus the best attainable clean risk (achieved by the
// mean direction itself). Gaussian noise family only.
double excess_risk(const Weights& w, const GmmConfig& config);

struct McEstimate {
  double estimate = 0.0;
  double std_err = 0.0;
};

// Monte Carlo estimate of the rho-noisy test error from m fresh draws.
// Works for any noise family. Requires m >= 100 and a nonzero classifier.
// The stream layout per draw is fixed (label, noise coordinates, one flip
// uniform), so runs at different rho consume identical stream positions and
// share the underlying sample when seeded alike.
McEstimate mc_risk(const Weights& w, const GmmConfig& config, double rho,
                   std::size_t m, Rng& rng);

struct RiskReport {
  enum class Method { closed_form, monte_carlo };

  double clean_risk = 0.0;
  double noisy_risk = 0.0;
  double excess_risk = 0.0;
  Method method = Method::closed_form;
  std::size_t mc_samples = 0;  // monte_carlo only
  double mc_std_err = 0.0;     // monte_carlo only (std err of clean_risk)
};

RiskReport closed_form_report(const Weights& w, const GmmConfig& config,
                              double rho);

RiskReport monte_carlo_report(const Weights& w, const GmmConfig& config,
                              double rho, std::size_t m, Rng& rng);

// Stable-key JSON object for a report.
std::string risk_report_json(const RiskReport& report);

}  // namespace overfitlab
