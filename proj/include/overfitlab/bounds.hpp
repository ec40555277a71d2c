#pragma once

#include <cstddef>

#include "overfitlab/rng.hpp"

namespace overfitlab {

// Free constants appearing in the risk bounds. Defaults pin every constant
// to 1 except the step-size constant, whose analysis needs c5 >= 2.
struct BoundConstants {
  double c2 = 1.0;   // noiseless rate exponent
  double c3 = 1.0;   // noisy lower bound scale
  double c4 = 1.0;   // reserved for the overparameterization window
  double c5 = 2.0;   // step-size safety factor, must be >= 2
  double c14 = 1.0;  // early-stopping exponent scale
  double c = 1.0;    // generic slack

  void validate() const;  // throws std::invalid_argument
};

// Floor on the clean risk of any interpolator when a rho fraction of labels
// is flipped, as a function of the overparameterization ratio r = p/n:
// min(Phi(-2), (rho / (c3 r)) * exp(-c3 r / rho)). Requires rho in (0, 0.5]
// and r > 0.
double lower_bound_noisy(double rho, double r, const BoundConstants& k);

// Ceiling on the excess risk of the early-stopped iterate:
// exp(-c14 * |mu|^4 / (|mu|^2 sigma^2 + sigma^4 p / n)), clamped to [0, 1].
double upper_bound_earlystop(double mu_norm, double sigma, std::size_t p,
                             std::size_t n, const BoundConstants& k);

// Ceiling on the excess risk of the noiseless interpolator: min(1, n^-c2).
double upper_bound_noiseless(std::size_t n, const BoundConstants& k);

// Monte Carlo checkers for the concentration claims the risk analysis rests
// on. Each runs `trials` independent experiments and returns the observed
// violation frequency; the claimed failure probability is delta, so the
// frequency should not exceed delta by more than sampling slack.

// max_i |X_i| of n draws of N(0, sigma^2) exceeding
// sqrt(2) * sigma * (sqrt(log n) + sqrt(log(1/delta))).
double check_max_subgaussian(std::size_t n, double sigma, double delta,
                             std::size_t trials, Rng& rng);

// |mean of n iid N(0, sigma^2 I_p) vectors| exceeding
// 4 sigma sqrt(p/n) + 2 sigma sqrt(log(1/delta) / n).
double check_noise_sum_norm(std::size_t n, std::size_t p, double sigma,
                            double delta, std::size_t trials, Rng& rng);

// Binomial(n, rho) flip count falling outside [rho n / 2, 3 rho n / 2].
// Meaningful when delta is at least about 2 exp(-rho^2 n / 8).
double check_noisy_count(std::size_t n, double rho, double delta,
                         std::size_t trials, Rng& rng);

}  // namespace overfitlab
