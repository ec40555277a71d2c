#include "overfitlab/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "overfitlab/util.hpp"

namespace overfitlab {

void TrainParams::validate() const {
  if (!std::isfinite(eta) || eta < 0.0) {
    throw std::invalid_argument("TrainParams: eta must be finite and >= 0");
  }
  if (!std::isfinite(loss_threshold) || loss_threshold <= 0.0) {
    throw std::invalid_argument("TrainParams: loss_threshold must be > 0");
  }
  if (max_epochs == 0) {
    throw std::invalid_argument("TrainParams: max_epochs must be >= 1");
  }
}

namespace {

// Shared epoch loop. `loss_threshold` may be 0 to disable loss stopping
// entirely (mean logistic loss is never negative).
Trajectory run_sgd(const Dataset& dataset, double eta, std::size_t max_epochs,
                   double loss_threshold, std::size_t stride, Weights w,
                   Rng& rng) {
  const std::size_t n = dataset.size();
  Trajectory traj;
  traj.iterates.push_back({0, w, mean_train_loss(w, dataset)});
  std::size_t t = 0;
  std::size_t last_recorded = 0;
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    const auto perm = random_permutation(n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      const Sample& s = dataset.samples[perm[i]];
      const double m = s.y_obs * dot(s.x, w.w);
      const double coef = eta * s.y_obs * logistic_sigmoid(-m);
      axpy(coef, s.x, w.w);
      ++t;
      if (t % stride == 0) {
        traj.iterates.push_back({t, w, mean_train_loss(w, dataset)});
        last_recorded = t;
      }
    }
    traj.epochs_completed = epoch;
    const double epoch_loss = last_recorded == t
                                  ? traj.iterates.back().train_loss
                                  : mean_train_loss(w, dataset);
    if (epoch_loss < loss_threshold) {
      traj.terminated_by = StopReason::threshold;
      break;
    }
  }
  if (last_recorded != t) {
    const double final_loss = mean_train_loss(w, dataset);
    traj.iterates.push_back({t, std::move(w), final_loss});
  }
  return traj;
}

}  // namespace

Trajectory multipass_sgd(const Dataset& dataset, const TrainParams& params,
                         Rng& rng) {
  params.validate();
  if (dataset.size() == 0) {
    throw std::invalid_argument("multipass_sgd: empty dataset");
  }
  Weights init;
  if (params.init.has_value()) {
    if (params.init->dim() != dataset.dim()) {
      throw std::invalid_argument("multipass_sgd: init dimension mismatch");
    }
    init = *params.init;
  } else {
    init.w.assign(dataset.dim(), 0.0);
  }
  const std::size_t stride =
      params.record_every == 0 ? dataset.size() : params.record_every;
  return run_sgd(dataset, params.eta, params.max_epochs, params.loss_threshold,
                 stride, std::move(init), rng);
}

Trajectory onepass_sgd(const Dataset& dataset, double eta, Rng& rng) {
  if (!std::isfinite(eta) || eta < 0.0) {
    throw std::invalid_argument("onepass_sgd: eta must be finite and >= 0");
  }
  if (dataset.size() == 0) {
    throw std::invalid_argument("onepass_sgd: empty dataset");
  }
  Weights init;
  init.w.assign(dataset.dim(), 0.0);
  return run_sgd(dataset, eta, 1, 0.0, 1, std::move(init), rng);
}

double safe_lr(const Dataset& dataset, double c5) {
  if (!(c5 >= 2.0)) {
    throw std::invalid_argument("safe_lr: c5 must be >= 2");
  }
  if (dataset.size() == 0) {
    throw std::invalid_argument("safe_lr: empty dataset");
  }
  double max_sq = 0.0;
  for (const Sample& s : dataset.samples) {
    max_sq = std::max(max_sq, squared_norm(s.x));
  }
  if (max_sq <= 0.0) {
    throw std::domain_error("safe_lr: all feature vectors are zero");
  }
  return 1.0 / (c5 * static_cast<double>(dataset.size()) * max_sq);
}

std::pair<std::size_t, double> early_stop_select(
    const Trajectory& trajectory,
    const std::function<double(const Weights&)>& evaluate) {
  bool found = false;
  std::size_t best_t = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (const TrajectoryPoint& point : trajectory.iterates) {
    if (point.w.is_zero()) continue;
    const double value = evaluate(point.w);
    if (!found || value < best_value) {
      found = true;
      best_value = value;
      best_t = point.t;
    }
  }
  if (!found) {
    throw std::runtime_error("early_stop_select: no nonzero iterate recorded");
  }
  return {best_t, best_value};
}

Weights run_staged_sgd(const Dataset& dataset, double eta0, double growth,
                       std::size_t stages, std::size_t per_stage, Rng& rng) {
  if (!std::isfinite(eta0) || eta0 <= 0.0) {
    throw std::invalid_argument("run_staged_sgd: eta0 must be positive");
  }
  if (!std::isfinite(growth) || growth < 1.0) {
    throw std::invalid_argument("run_staged_sgd: growth must be >= 1");
  }
  if (stages == 0 || per_stage == 0) {
    throw std::invalid_argument(
        "run_staged_sgd: stages and per_stage must be >= 1");
  }
  const std::size_t n = dataset.size();
  if (n == 0) throw std::invalid_argument("run_staged_sgd: empty dataset");

  TrainParams params;
  params.max_epochs = (per_stage + n - 1) / n;
  params.record_every = n * params.max_epochs + 1;  // only the final iterate
  // Denormal-small threshold: never reached, so every stage runs its full
  // update budget.
  params.loss_threshold = std::numeric_limits<double>::denorm_min();
  Weights w;
  w.w.assign(dataset.dim(), 0.0);
  double eta = eta0;
  for (std::size_t stage = 0; stage < stages; ++stage) {
    params.eta = eta;
    params.init = w;
    const Trajectory traj = multipass_sgd(dataset, params, rng);
    w = traj.iterates.back().w;
    eta *= growth;
  }
  return w;
}

std::vector<Weights> surrogate_trajectory(
    const Dataset& dataset, double eta,
    const std::vector<std::size_t>& order) {
  const std::size_t n = dataset.size();
  if (n == 0) {
    throw std::invalid_argument("surrogate_trajectory: empty dataset");
  }
  if (order.size() != n) {
    throw std::invalid_argument("surrogate_trajectory: order size mismatch");
  }
  std::vector<char> seen(n, 0);
  for (std::size_t idx : order) {
    if (idx >= n || seen[idx]) {
      throw std::invalid_argument(
          "surrogate_trajectory: order is not a permutation");
    }
    seen[idx] = 1;
  }
  std::vector<Weights> out;
  out.reserve(n + 1);
  Weights w;
  w.w.assign(dataset.dim(), 0.0);
  out.push_back(w);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = dataset.samples[order[i]];
    axpy(0.5 * eta * s.y_obs, s.x, w.w);
    out.push_back(w);
  }
  return out;
}

}  // namespace overfitlab
