#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "overfitlab/gmm.hpp"
#include "overfitlab/linear_model.hpp"

namespace overfitlab {

struct MaxMarginSolution {
  Weights w;
  std::vector<double> alphas;  // dual coefficients, length n, all >= 0
  double kkt_residual = 0.0;   // max of feasibility and slackness violations
  bool converged = false;
};

// Raised when the dual iteration certifies (heuristically) that no unit
// margin separator exists: the dual coefficients blow past the divergence
// guard while the primal point stays infeasible.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& message, double alpha_sum, double w_norm,
                  double min_margin, std::size_t sweeps)
      : std::runtime_error(message),
        alpha_sum_(alpha_sum),
        w_norm_(w_norm),
        min_margin_(min_margin),
        sweeps_(sweeps) {}

  double alpha_sum() const { return alpha_sum_; }
  double w_norm() const { return w_norm_; }
  double min_margin() const { return min_margin_; }
  std::size_t sweeps() const { return sweeps_; }

 private:
  double alpha_sum_;
  double w_norm_;
  double min_margin_;
  std::size_t sweeps_;
};

// Hard-margin separator of minimum norm: min |w|^2 subject to
// y_i * (x_i . w) >= 1 against observed labels. Solved by cyclic dual
// coordinate ascent with exact per-coordinate maximization and projection
// onto alpha_i >= 0; max_iters counts full sweeps. Returns converged=false
// with the best iterate when the sweep budget runs out; throws
// InfeasibleError when the divergence guard trips (sum of alphas beyond
// 1e12 with the primal point still far from feasible) or when a sample has
// a zero feature vector.
MaxMarginSolution solve_max_margin(const Dataset& dataset, double tol = 1e-8,
                                   std::size_t max_iters = 50000);

// True iff solve_max_margin converges at default tolerance. Infeasibility
// and sweep exhaustion both count as not separable.
bool is_separable(const Dataset& dataset);

// 1 - cos(angle between a and b), in [0, 2]. Both inputs must be nonzero.
double direction_gap(const Weights& a, const Weights& b);

// Stable-key JSON object {alphas, converged, kkt_residual, w}.
std::string max_margin_json(const MaxMarginSolution& solution);

}  // namespace overfitlab
