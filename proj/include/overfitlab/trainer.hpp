#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "overfitlab/gmm.hpp"
#include "overfitlab/linear_model.hpp"
#include "overfitlab/rng.hpp"

namespace overfitlab {

struct TrainParams {
  double eta = 1e-5;
  std::size_t max_epochs = 1;
  double loss_threshold = 0.05;
  // Record every record_every-th update (0 means once per epoch). The
  // initial point t = 0 and the final iterate are always recorded.
  std::size_t record_every = 0;
  // Starting point; zero vector when absent.
  std::optional<Weights> init;

  // Throws std::invalid_argument on nonsensical values. eta = 0 is allowed
  // (a flat run that never moves); negative or non-finite eta is not.
  void validate() const;
};

enum class StopReason { threshold, max_epochs };

struct TrajectoryPoint {
  std::size_t t = 0;  // number of single-sample updates applied
  Weights w;
  double train_loss = 0.0;  // mean logistic loss over observed labels
};

struct Trajectory {
  std::vector<TrajectoryPoint> iterates;
  std::size_t epochs_completed = 0;
  StopReason terminated_by = StopReason::max_epochs;
};

// Multi-pass SGD on the mean logistic loss against observed labels. Each
// epoch visits every sample once in a fresh uniform random order drawn from
// rng. Stops at the end of the first epoch whose mean train loss is below
// loss_threshold, or after max_epochs.
Trajectory multipass_sgd(const Dataset& dataset, const TrainParams& params,
                         Rng& rng);

// Single epoch from zero initialization with every iterate recorded
// (n + 1 points including t = 0). No loss-based stopping.
Trajectory onepass_sgd(const Dataset& dataset, double eta, Rng& rng);

// Step size 1 / (c5 * n * max_i |x_i|^2), the largest rate the one-pass
// analysis permits. Requires c5 >= 2; throws std::domain_error when every
// feature vector is zero.
double safe_lr(const Dataset& dataset, double c5 = 2.0);

// Recorded iterate minimizing `evaluate`, skipping exact-zero iterates
// (which define no classifier). Ties resolve to the smallest t. Throws
// std::runtime_error when no nonzero iterate exists.
std::pair<std::size_t, double> early_stop_select(
    const Trajectory& trajectory,
    const std::function<double(const Weights&)>& evaluate);

// Long-run SGD for margin maximization: `stages` warm-started multipass
// segments of per_stage updates each, with the step size multiplied by
// `growth` between segments. Once the data is interpolated the gradient
// scale decays exponentially in the margin, so a geometrically growing
// step keeps the iterate norm climbing and the direction approaches the
// max-margin separator far faster than under a constant step (whose
// direction error shrinks only like 1 / log t). Returns the final iterate.
// Requires eta0 > 0, growth >= 1, stages >= 1, per_stage >= 1.
Weights run_staged_sgd(const Dataset& dataset, double eta0, double growth,
                       std::size_t stages, std::size_t per_stage, Rng& rng);

// Running-sum stand-in for one-pass SGD: w~_t = (eta / 2) * sum of the
// first t terms x_s * y_s (observed labels) in visitation order. Returns
// n + 1 vectors starting at zero. `order` must be a permutation of
// {0,...,n-1}.
std::vector<Weights> surrogate_trajectory(const Dataset& dataset, double eta,
                                          const std::vector<std::size_t>& order);

}  // namespace overfitlab
