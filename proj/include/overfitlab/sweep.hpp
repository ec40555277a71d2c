#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "overfitlab/gmm.hpp"

namespace overfitlab {

enum class InterpolatorMode { sgd_long, exact_qp };

struct SweepConfig {
  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> p_grid;
  std::vector<double> rho_list;
  double mu_norm = 40.0;
  double sigma = 1.0;
  double eta = 1e-5;
  double loss_threshold = 0.05;
  std::size_t max_epochs = 200;
  std::size_t reps = 3;
  std::uint64_t base_seed = 1;
  InterpolatorMode interpolator_mode = InterpolatorMode::sgd_long;

  // Throws std::invalid_argument unless the grids are nonempty, strictly
  // ascending, rho values lie in [0, 0.5], and the scalar parameters are in
  // range. Only cells with n <= p are ever run.
  void validate() const;
};

struct CellResult {
  std::size_t n = 0;
  std::size_t p = 0;
  double rho = 0.0;
  std::size_t rep = 0;
  double r = 0.0;  // p / n
  bool separable = false;
  std::size_t epochs = 0;
  double last_excess = 0.0;
  double best_excess = 0.0;
  std::size_t best_t = 0;
  double final_margin = 0.0;
  std::uint64_t seed = 0;
};

struct SweepResult {
  SweepConfig config;
  std::vector<CellResult> cells;  // (i_n, i_p, i_rho, rep) lexicographic
};

// One grid cell, addressed positionally so any cell can be recomputed in
// isolation: the cell seed depends only on base_seed and the four indices.
// The cell samples a dataset, corrupts labels, trains multi-pass SGD
// recording one iterate per epoch, and scores the final model (the SGD
// final iterate, or the exact max-margin solution in exact_qp mode) plus
// the best early-stopped iterate. Solver failures are recorded in the cell
// as NaN scores, never thrown.
CellResult run_cell(const SweepConfig& config, std::size_t i_n,
                    std::size_t i_p, std::size_t i_rho, std::size_t rep);

// Runs every cell with n <= p. `threads` only changes the wall clock; the
// result is identical for any thread count.
SweepResult run_sweep(const SweepConfig& config, unsigned threads = 1);

// Header n,p,rho,rep,r,separable,epochs,last_excess,best_excess,best_t,
// final_margin,seed; shortest round-trip decimals; LF endings.
void emit_csv(const SweepResult& result, const std::string& path);

enum class CellField { last_excess, best_excess };

// Binary PGM (P5, maxval 255), rows = p_grid ascending top to bottom,
// columns = n_grid ascending left to right. Each pixel aggregates the
// median over reps of the chosen field at the given rho and maps it by
// 255 - round(255 * clamp(value / 0.5, 0, 1)) with round-half-away-from-
// zero, so small excess risk renders bright. Cells with n > p, and cells
// whose median is not finite, render 0. Writes a sidecar JSON next to the
// image ("<path>.json") recording field, rho, grid, scale_max, and the
// colormap formula. Throws std::invalid_argument for a rho not in the
// result's rho_list.
void emit_heatmap(const SweepResult& result, CellField field, double rho,
                  const std::string& path);

struct SlopeReport {
  double rho = 0.0;
  double r = 0.0;
  std::vector<std::size_t> ns;       // ascending
  std::vector<double> medians;       // median last_excess per n
  double final_over_first = 0.0;
};

// Trend of median last_excess along the fixed-ratio diagonal p = r * n.
// Requires at least 3 grid points on the diagonal at the given rho.
SlopeReport slope_test(const SweepResult& result, double rho, double r);

}  // namespace overfitlab
