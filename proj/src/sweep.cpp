#include "overfitlab/sweep.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "overfitlab/max_margin.hpp"
#include "overfitlab/risk.hpp"
#include "overfitlab/trainer.hpp"
#include "overfitlab/util.hpp"

namespace overfitlab {

namespace {

constexpr double kHeatmapScaleMax = 0.5;

// Sweep budget for the exact separator. Near-square noisy cells sit close
// to the separability edge (the Gram matrix is nearly singular there), and
// coordinate ascent needs a few hundred thousand sweeps on the hardest
// 512x512 cells; converged cells exit at tolerance long before this cap.
constexpr std::size_t kSweepQpMaxIters = 2000000;

template <typename T>
void check_ascending(const std::vector<T>& grid, const char* name) {
  if (grid.empty()) {
    throw std::invalid_argument(std::string("SweepConfig: ") + name +
                                " must be nonempty");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i - 1] < grid[i])) {
      throw std::invalid_argument(std::string("SweepConfig: ") + name +
                                  " must be strictly ascending");
    }
  }
}

}  // namespace

void SweepConfig::validate() const {
  check_ascending(n_grid, "n_grid");
  check_ascending(p_grid, "p_grid");
  check_ascending(rho_list, "rho_list");
  for (std::size_t n : n_grid) {
    if (n == 0) throw std::invalid_argument("SweepConfig: n values must be >= 1");
  }
  for (std::size_t p : p_grid) {
    if (p == 0) throw std::invalid_argument("SweepConfig: p values must be >= 1");
  }
  for (double rho : rho_list) {
    if (!(rho >= 0.0 && rho <= 0.5)) {
      throw std::invalid_argument("SweepConfig: rho values must be in [0, 0.5]");
    }
  }
  if (!std::isfinite(mu_norm) || mu_norm <= 0.0) {
    throw std::invalid_argument("SweepConfig: mu_norm must be positive");
  }
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw std::invalid_argument("SweepConfig: sigma must be positive");
  }
  if (!std::isfinite(eta) || eta < 0.0) {
    throw std::invalid_argument("SweepConfig: eta must be finite and >= 0");
  }
  if (!std::isfinite(loss_threshold) || loss_threshold <= 0.0) {
    throw std::invalid_argument("SweepConfig: loss_threshold must be > 0");
  }
  if (max_epochs == 0) {
    throw std::invalid_argument("SweepConfig: max_epochs must be >= 1");
  }
  if (reps == 0) throw std::invalid_argument("SweepConfig: reps must be >= 1");
}

CellResult run_cell(const SweepConfig& config, std::size_t i_n,
                    std::size_t i_p, std::size_t i_rho, std::size_t rep) {
  config.validate();
  if (i_n >= config.n_grid.size() || i_p >= config.p_grid.size() ||
      i_rho >= config.rho_list.size() || rep >= config.reps) {
    throw std::invalid_argument("run_cell: index out of range");
  }
  const std::size_t n = config.n_grid[i_n];
  const std::size_t p = config.p_grid[i_p];
  const double rho = config.rho_list[i_rho];
  const double nan = std::numeric_limits<double>::quiet_NaN();

  CellResult cell;
  cell.n = n;
  cell.p = p;
  cell.rho = rho;
  cell.rep = rep;
  cell.r = static_cast<double>(p) / static_cast<double>(n);
  cell.seed = cell_seed(config.base_seed, i_n, i_p, i_rho, rep);

  Rng rng(cell.seed);
  GmmConfig gmm;
  gmm.p = p;
  gmm.mu = make_signal(p, config.mu_norm, SignalMode::axis);
  gmm.sigma = config.sigma;
  const Dataset clean = sample_noiseless(gmm, n, rng);
  const Dataset data = corrupt_labels(clean, rho, rng);

  TrainParams params;
  params.eta = config.eta;
  params.max_epochs = config.max_epochs;
  params.loss_threshold = config.loss_threshold;
  params.record_every = 0;  // one iterate per epoch
  const Trajectory traj = multipass_sgd(data, params, rng);
  cell.epochs = traj.epochs_completed;

  try {
    const auto [best_t, best_value] =
        early_stop_select(traj, [&](const Weights& w) { return excess_risk(w, gmm); });
    cell.best_t = best_t;
    cell.best_excess = best_value;
  } catch (const std::runtime_error&) {
    cell.best_t = 0;
    cell.best_excess = nan;
  }

  if (config.interpolator_mode == InterpolatorMode::exact_qp) {
    cell.last_excess = nan;
    cell.final_margin = nan;
    cell.separable = false;
    try {
      const MaxMarginSolution sol = solve_max_margin(data, 1e-8, kSweepQpMaxIters);
      cell.separable = sol.converged;
      if (sol.converged) {
        cell.last_excess = excess_risk(sol.w, gmm);
        cell.final_margin = dataset_margin(sol.w, data, LabelMode::observed);
      }
    } catch (const InfeasibleError&) {
      // recorded as an unseparable cell with NaN scores
    }
  } else {
    const Weights& final_w = traj.iterates.back().w;
    if (final_w.is_zero()) {
      cell.last_excess = nan;
      cell.final_margin = nan;
      cell.separable = false;
    } else {
      cell.last_excess = excess_risk(final_w, gmm);
      cell.final_margin = dataset_margin(final_w, data, LabelMode::observed);
      cell.separable = cell.final_margin > 0.0;
    }
  }
  return cell;
}

SweepResult run_sweep(const SweepConfig& config, unsigned threads) {
  config.validate();
  struct CellAddress {
    std::size_t i_n, i_p, i_rho, rep;
  };
  std::vector<CellAddress> addresses;
  for (std::size_t i_n = 0; i_n < config.n_grid.size(); ++i_n) {
    for (std::size_t i_p = 0; i_p < config.p_grid.size(); ++i_p) {
      if (config.n_grid[i_n] > config.p_grid[i_p]) continue;
      for (std::size_t i_rho = 0; i_rho < config.rho_list.size(); ++i_rho) {
        for (std::size_t rep = 0; rep < config.reps; ++rep) {
          addresses.push_back({i_n, i_p, i_rho, rep});
        }
      }
    }
  }

  SweepResult result;
  result.config = config;
  result.cells.resize(addresses.size());
  if (addresses.empty()) return result;

  const unsigned worker_count =
      std::max(1u, std::min<unsigned>(threads, addresses.size()));
  if (worker_count == 1) {
    for (std::size_t k = 0; k < addresses.size(); ++k) {
      const CellAddress& a = addresses[k];
      result.cells[k] = run_cell(config, a.i_n, a.i_p, a.i_rho, a.rep);
    }
    return result;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_lock;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= addresses.size()) return;
      try {
        const CellAddress& a = addresses[k];
        result.cells[k] = run_cell(config, a.i_n, a.i_p, a.i_rho, a.rep);
      } catch (...) {
        std::scoped_lock hold(error_lock);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(worker_count);
  for (unsigned t = 0; t < worker_count; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

void emit_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("emit_csv: cannot open " + path);
  out << "n,p,rho,rep,r,separable,epochs,last_excess,best_excess,best_t,"
         "final_margin,seed\n";
  for (const CellResult& c : result.cells) {
    out << c.n << ',' << c.p << ',' << format_double(c.rho) << ',' << c.rep
        << ',' << format_double(c.r) << ',' << (c.separable ? 1 : 0) << ','
        << c.epochs << ',' << format_double(c.last_excess) << ','
        << format_double(c.best_excess) << ',' << c.best_t << ','
        << format_double(c.final_margin) << ',' << c.seed << '\n';
  }
  if (!out) throw IoError("emit_csv: write failed for " + path);
}

namespace {

double cell_field_value(const CellResult& cell, CellField field) {
  return field == CellField::last_excess ? cell.last_excess : cell.best_excess;
}

const char* cell_field_name(CellField field) {
  return field == CellField::last_excess ? "last_excess" : "best_excess";
}

// 255 - round(255 * clamp(value / scale, 0, 1)) with round-half-away-from-
// zero; non-finite values render black.
unsigned char heatmap_pixel(double value) {
  if (!std::isfinite(value)) return 0;
  double c = value / kHeatmapScaleMax;
  if (c < 0.0) c = 0.0;
  if (c > 1.0) c = 1.0;
  const int level = static_cast<int>(std::round(255.0 * c));
  return static_cast<unsigned char>(255 - level);
}

}  // namespace

void emit_heatmap(const SweepResult& result, CellField field, double rho,
                  const std::string& path) {
  const SweepConfig& cfg = result.config;
  bool known_rho = false;
  for (double candidate : cfg.rho_list) {
    if (candidate == rho) known_rho = true;
  }
  if (!known_rho) {
    throw std::invalid_argument("emit_heatmap: rho " + format_double(rho) +
                                " is not a slice of this sweep");
  }

  const std::size_t width = cfg.n_grid.size();
  const std::size_t height = cfg.p_grid.size();
  std::vector<unsigned char> pixels(width * height, 0);
  for (std::size_t row = 0; row < height; ++row) {
    const std::size_t p = cfg.p_grid[row];
    for (std::size_t col = 0; col < width; ++col) {
      const std::size_t n = cfg.n_grid[col];
      if (n > p) continue;  // outside the sweep triangle, stays black
      std::vector<double> values;
      for (const CellResult& c : result.cells) {
        if (c.n == n && c.p == p && c.rho == rho) {
          values.push_back(cell_field_value(c, field));
        }
      }
      pixels[row * width + col] = heatmap_pixel(median_finite(std::move(values)));
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("emit_heatmap: cannot open " + path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("emit_heatmap: write failed for " + path);

  std::string sidecar = "{\"colormap_formula\":\"pixel = 255 - round(255 * "
                        "clamp(value / 0.5, 0, 1))\",\"field\":\"";
  sidecar += cell_field_name(field);
  sidecar += "\",\"grid\":{\"n\":[";
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (i > 0) sidecar += ',';
    sidecar += std::to_string(cfg.n_grid[i]);
  }
  sidecar += "],\"p\":[";
  for (std::size_t i = 0; i < cfg.p_grid.size(); ++i) {
    if (i > 0) sidecar += ',';
    sidecar += std::to_string(cfg.p_grid[i]);
  }
  sidecar += "]},\"rho\":" + format_double(rho);
  sidecar += ",\"scale_max\":" + format_double(kHeatmapScaleMax);
  sidecar += '}';
  std::ofstream side(path + ".json", std::ios::binary);
  if (!side) throw IoError("emit_heatmap: cannot open " + path + ".json");
  side << sidecar << '\n';
  if (!side) throw IoError("emit_heatmap: write failed for " + path + ".json");
}

SlopeReport slope_test(const SweepResult& result, double rho, double r) {
  const SweepConfig& cfg = result.config;
  SlopeReport report;
  report.rho = rho;
  report.r = r;
  for (std::size_t n : cfg.n_grid) {
    const double target_p = r * static_cast<double>(n);
    for (std::size_t p : cfg.p_grid) {
      if (n > p) continue;
      if (std::fabs(static_cast<double>(p) - target_p) >
          1e-9 * std::max(1.0, target_p)) {
        continue;
      }
      std::vector<double> values;
      for (const CellResult& c : result.cells) {
        if (c.n == n && c.p == p && c.rho == rho) {
          values.push_back(c.last_excess);
        }
      }
      if (values.empty()) continue;
      report.ns.push_back(n);
      report.medians.push_back(median_finite(std::move(values)));
    }
  }
  if (report.ns.size() < 3) {
    throw std::invalid_argument(
        "slope_test: need at least 3 grid points on the diagonal");
  }
  report.final_over_first = report.medians.back() / report.medians.front();
  return report;
}

}  // namespace overfitlab
