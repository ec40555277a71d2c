#include "overfitlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "overfitlab/risk.hpp"
#include "overfitlab/util.hpp"

namespace overfitlab {

void BoundConstants::validate() const {
  const double values[] = {c2, c3, c4, c14, c};
  for (double v : values) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument("BoundConstants: constants must be positive");
    }
  }
  if (!std::isfinite(c5) || c5 < 2.0) {
    throw std::invalid_argument("BoundConstants: c5 must be >= 2");
  }
}

double lower_bound_noisy(double rho, double r, const BoundConstants& k) {
  k.validate();
  if (!(rho > 0.0 && rho <= 0.5)) {
    throw std::invalid_argument("lower_bound_noisy: rho must be in (0, 0.5]");
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("lower_bound_noisy: r must be positive");
  }
  const double tail = normal_cdf(-2.0);
  const double scaled = k.c3 * r / rho;
  const double envelope = (rho / (k.c3 * r)) * std::exp(-scaled);
  return std::min(tail, envelope);
}

double upper_bound_earlystop(double mu_norm, double sigma, std::size_t p,
                             std::size_t n, const BoundConstants& k) {
  k.validate();
  if (!std::isfinite(mu_norm) || mu_norm <= 0.0) {
    throw std::invalid_argument("upper_bound_earlystop: mu_norm must be > 0");
  }
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw std::invalid_argument("upper_bound_earlystop: sigma must be > 0");
  }
  if (p == 0 || n == 0) {
    throw std::invalid_argument("upper_bound_earlystop: p and n must be >= 1");
  }
  const double mu2 = mu_norm * mu_norm;
  const double sig2 = sigma * sigma;
  const double denom =
      mu2 * sig2 + sig2 * sig2 * static_cast<double>(p) / static_cast<double>(n);
  const double value = std::exp(-k.c14 * mu2 * mu2 / denom);
  return std::clamp(value, 0.0, 1.0);
}

double upper_bound_noiseless(std::size_t n, const BoundConstants& k) {
  k.validate();
  if (n == 0) {
    throw std::invalid_argument("upper_bound_noiseless: n must be >= 1");
  }
  return std::min(1.0, std::pow(static_cast<double>(n), -k.c2));
}

namespace {

void check_checker_args(double delta, std::size_t trials) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("claim checker: delta must be in (0, 1)");
  }
  if (trials == 0) {
    throw std::invalid_argument("claim checker: trials must be >= 1");
  }
}

}  // namespace

double check_max_subgaussian(std::size_t n, double sigma, double delta,
                             std::size_t trials, Rng& rng) {
  if (n == 0) throw std::invalid_argument("check_max_subgaussian: n >= 1");
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("check_max_subgaussian: sigma must be > 0");
  }
  check_checker_args(delta, trials);
  const double threshold =
      std::sqrt(2.0) * sigma *
      (std::sqrt(std::log(static_cast<double>(n))) + std::sqrt(std::log(1.0 / delta)));
  const std::uint64_t base = rng.next_u64();
  std::vector<double> draws(n);
  std::size_t violations = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng trial_rng(derive_seed(base, trial));
    fill_gaussian(trial_rng, sigma, draws);
    double max_abs = 0.0;
    for (double v : draws) max_abs = std::max(max_abs, std::fabs(v));
    if (max_abs > threshold) ++violations;
  }
  return static_cast<double>(violations) / static_cast<double>(trials);
}

double check_noise_sum_norm(std::size_t n, std::size_t p, double sigma,
                            double delta, std::size_t trials, Rng& rng) {
  if (n == 0 || p == 0) {
    throw std::invalid_argument("check_noise_sum_norm: n and p must be >= 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("check_noise_sum_norm: sigma must be > 0");
  }
  check_checker_args(delta, trials);
  const double nd = static_cast<double>(n);
  const double bound = 4.0 * sigma * std::sqrt(static_cast<double>(p) / nd) +
                       2.0 * sigma * std::sqrt(std::log(1.0 / delta) / nd);
  const std::uint64_t base = rng.next_u64();
  std::vector<double> sum(p);
  std::vector<double> draw(p);
  std::size_t violations = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng trial_rng(derive_seed(base, trial));
    sum.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      fill_gaussian(trial_rng, sigma, draw);
      axpy(1.0, draw, sum);
    }
    if (norm(sum) / nd > bound) ++violations;
  }
  return static_cast<double>(violations) / static_cast<double>(trials);
}

double check_noisy_count(std::size_t n, double rho, double delta,
                         std::size_t trials, Rng& rng) {
  if (n == 0) throw std::invalid_argument("check_noisy_count: n >= 1");
  if (!(rho > 0.0 && rho <= 0.5)) {
    throw std::invalid_argument("check_noisy_count: rho must be in (0, 0.5]");
  }
  check_checker_args(delta, trials);
  const double expected = rho * static_cast<double>(n);
  // The window endpoints are exact half-multiples in the analysis; keep an
  // epsilon so binary floating point cannot misclassify a boundary count.
  const double eps = 1e-9 * std::max(1.0, expected);
  const double lo = 0.5 * expected - eps;
  const double hi = 1.5 * expected + eps;
  const std::uint64_t base = rng.next_u64();
  std::size_t violations = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng trial_rng(derive_seed(base, trial));
    std::size_t flips = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (trial_rng.next_uniform() < rho) ++flips;
    }
    const double k = static_cast<double>(flips);
    if (k < lo || k > hi) ++violations;
  }
  return static_cast<double>(violations) / static_cast<double>(trials);
}

}  // namespace overfitlab
