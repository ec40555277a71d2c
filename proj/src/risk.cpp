#include "overfitlab/risk.hpp"

#include <cmath>
#include <stdexcept>

#include "overfitlab/util.hpp"

namespace overfitlab {

double normal_cdf(double z) {
  constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

double closed_form_risk(const Weights& w, const std::vector<double>& mu,
                        double sigma) {
  if (w.dim() != mu.size()) {
    throw std::invalid_argument("closed_form_risk: dimension mismatch");
  }
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw std::invalid_argument("closed_form_risk: sigma must be positive");
  }
  const double len = w.norm();
  if (len <= 0.0) {
    throw std::invalid_argument(
        "closed_form_risk: zero classifier has no decision rule");
  }
  return normal_cdf(-dot(mu, w.w) / (sigma * len));
}

double noisy_risk(double clean_risk, double rho) {
  if (!(clean_risk >= 0.0 && clean_risk <= 1.0)) {
    throw std::invalid_argument("noisy_risk: clean_risk must be in [0,1]");
  }
  if (!(rho >= 0.0 && rho <= 0.5)) {
    throw std::invalid_argument("noisy_risk: rho must be in [0, 0.5]");
  }
  return rho + (1.0 - 2.0 * rho) * clean_risk;
}

double excess_risk(const Weights& w, const GmmConfig& config) {
  config.validate();
  if (config.noise_family != NoiseFamily::gaussian) {
    throw std::invalid_argument(
        "excess_risk: closed form requires Gaussian noise");
  }
  const double bayes = normal_cdf(-norm(config.mu) / config.sigma);
  return closed_form_risk(w, config.mu, config.sigma) - bayes;
}

McEstimate mc_risk(const Weights& w, const GmmConfig& config, double rho,
                   std::size_t m, Rng& rng) {
  config.validate();
  if (w.dim() != config.p) {
    throw std::invalid_argument("mc_risk: dimension mismatch");
  }
  if (w.is_zero()) {
    throw std::invalid_argument("mc_risk: zero classifier has no decision rule");
  }
  if (!(rho >= 0.0 && rho <= 0.5)) {
    throw std::invalid_argument("mc_risk: rho must be in [0, 0.5]");
  }
  if (m < 100) throw std::invalid_argument("mc_risk: need m >= 100");

  std::vector<double> x(config.p);
  std::size_t errors = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const int y = rng.next_uniform() < 0.5 ? -1 : 1;
    switch (config.noise_family) {
      case NoiseFamily::gaussian:
        fill_gaussian(rng, config.sigma, x);
        break;
      case NoiseFamily::rademacher_scaled:
        for (double& v : x) {
          v = rng.next_uniform() < 0.5 ? -config.sigma : config.sigma;
        }
        break;
    }
    for (std::size_t j = 0; j < config.p; ++j) x[j] += y * config.mu[j];
    const double u_flip = rng.next_uniform();
    const int y_obs = u_flip < rho ? -y : y;
    if (y_obs * dot(x, w.w) <= 0.0) ++errors;
  }
  McEstimate est;
  est.estimate = static_cast<double>(errors) / static_cast<double>(m);
  est.std_err =
      std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(m));
  return est;
}

RiskReport closed_form_report(const Weights& w, const GmmConfig& config,
                              double rho) {
  RiskReport r;
  r.method = RiskReport::Method::closed_form;
  r.clean_risk = closed_form_risk(w, config.mu, config.sigma);
  r.noisy_risk = noisy_risk(r.clean_risk, rho);
  r.excess_risk = excess_risk(w, config);
  return r;
}

RiskReport monte_carlo_report(const Weights& w, const GmmConfig& config,
                              double rho, std::size_t m, Rng& rng) {
  RiskReport r;
  r.method = RiskReport::Method::monte_carlo;
  const McEstimate clean = mc_risk(w, config, 0.0, m, rng);
  r.clean_risk = clean.estimate;
  r.mc_samples = m;
  r.mc_std_err = clean.std_err;
  r.noisy_risk = noisy_risk(r.clean_risk, rho);
  double bayes;
  if (config.noise_family == NoiseFamily::gaussian) {
    bayes = normal_cdf(-norm(config.mu) / config.sigma);
  } else {
    Weights mu_dir{config.mu};
    bayes = mc_risk(mu_dir, config, 0.0, m, rng).estimate;
  }
  r.excess_risk = r.clean_risk - bayes;
  return r;
}

std::string risk_report_json(const RiskReport& report) {
  std::string out = "{";
  out += "\"clean_risk\":" + format_double(report.clean_risk);
  out += ",\"excess_risk\":" + format_double(report.excess_risk);
  out += ",\"method\":\"";
  out += report.method == RiskReport::Method::closed_form ? "closed_form"
                                                          : "monte_carlo";
  out += '"';
  if (report.method == RiskReport::Method::monte_carlo) {
    out += ",\"mc_samples\":" + std::to_string(report.mc_samples);
    out += ",\"mc_std_err\":" + format_double(report.mc_std_err);
  }
  out += ",\"noisy_risk\":" + format_double(report.noisy_risk);
  out += '}';
  return out;
}

}  // namespace overfitlab
