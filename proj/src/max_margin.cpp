#include "overfitlab/max_margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "overfitlab/util.hpp"

namespace overfitlab {

namespace {

constexpr double kAlphaSumGuard = 1e12;
// Above this n the full Gram matrix is not cached and margins are tracked
// through the primal vector instead (O(p) per coordinate rather than O(n)).
constexpr std::size_t kGramCacheLimit = 4096;

struct KktTerms {
  double feasibility = 0.0;  // max(0, max_i (1 - m_i))
  double slackness = 0.0;    // max(0, max_i alpha_i * (m_i - 1))
  double min_margin = std::numeric_limits<double>::infinity();

  double residual() const { return std::max(feasibility, slackness); }
};

KktTerms kkt_from_margins(const std::vector<double>& margins,
                          const std::vector<double>& alphas) {
  KktTerms terms;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    terms.feasibility = std::max(terms.feasibility, 1.0 - margins[i]);
    terms.slackness = std::max(terms.slackness, alphas[i] * (margins[i] - 1.0));
    terms.min_margin = std::min(terms.min_margin, margins[i]);
  }
  terms.feasibility = std::max(terms.feasibility, 0.0);
  terms.slackness = std::max(terms.slackness, 0.0);
  return terms;
}

}  // namespace

MaxMarginSolution solve_max_margin(const Dataset& dataset, double tol,
                                   std::size_t max_iters) {
  const std::size_t n = dataset.size();
  const std::size_t p = dataset.dim();
  if (n == 0) throw std::invalid_argument("solve_max_margin: empty dataset");
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw std::invalid_argument("solve_max_margin: tol must be positive");
  }
  if (max_iters == 0) {
    throw std::invalid_argument("solve_max_margin: max_iters must be >= 1");
  }

  std::vector<double> ys(n);
  std::vector<double> qdiag(n);
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = dataset.samples[i].y_obs;
    qdiag[i] = squared_norm(dataset.samples[i].x);
    if (qdiag[i] <= 0.0) {
      throw InfeasibleError(
          "solve_max_margin: zero feature vector cannot attain unit margin",
          0.0, 0.0, 0.0, 0);
    }
  }

  const bool cached = n <= kGramCacheLimit;
  std::vector<double> gram;  // row-major y_i y_j <x_i, x_j>, cached mode only
  if (cached) {
    gram.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double q =
            ys[i] * ys[j] * dot(dataset.samples[i].x, dataset.samples[j].x);
        gram[i * n + j] = q;
        gram[j * n + i] = q;
      }
    }
  }

  std::vector<double> alphas(n, 0.0);
  // margins[i] tracks y_i x_i . w for the current alphas (exact at alpha=0).
  std::vector<double> margins(n, 0.0);
  std::vector<double> w(p, 0.0);  // primal vector, maintained in uncached mode

  auto rebuild_primal = [&](std::vector<double>& out) {
    out.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (alphas[i] != 0.0) axpy(alphas[i] * ys[i], dataset.samples[i].x, out);
    }
  };
  auto refresh_margins = [&] {
    if (cached) {
      for (std::size_t i = 0; i < n; ++i) {
        double g = 0.0;
        const double* row = gram.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) g += row[j] * alphas[j];
        margins[i] = g;
      }
    } else {
      rebuild_primal(w);
      for (std::size_t i = 0; i < n; ++i) {
        margins[i] = ys[i] * dot(dataset.samples[i].x, w);
      }
    }
  };

  // Final margins are always recomputed from the reconstructed primal
  // vector so the reported residual matches the returned w exactly.
  auto finish = [&](bool converged) {
    MaxMarginSolution sol;
    rebuild_primal(sol.w.w);
    std::vector<double> exact(n);
    for (std::size_t i = 0; i < n; ++i) {
      exact[i] = ys[i] * dot(dataset.samples[i].x, sol.w.w);
    }
    const KktTerms terms = kkt_from_margins(exact, alphas);
    sol.alphas = alphas;
    sol.kkt_residual = terms.residual();
    sol.converged = converged && sol.kkt_residual <= tol;
    return sol;
  };

  double alpha_sum = 0.0;
  for (std::size_t sweep = 1; sweep <= max_iters; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      const double gi =
          cached ? margins[i] : ys[i] * dot(dataset.samples[i].x, w);
      const double candidate = alphas[i] + (1.0 - gi) / qdiag[i];
      const double next = candidate > 0.0 ? candidate : 0.0;
      const double delta = next - alphas[i];
      if (delta == 0.0) continue;
      alphas[i] = next;
      alpha_sum += delta;
      if (cached) {
        const double* row = gram.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) margins[j] += delta * row[j];
      } else {
        axpy(delta * ys[i], dataset.samples[i].x, w);
      }
    }

    if (!cached) {
      for (std::size_t i = 0; i < n; ++i) {
        margins[i] = ys[i] * dot(dataset.samples[i].x, w);
      }
    }
    const KktTerms terms = kkt_from_margins(margins, alphas);
    if (terms.residual() <= tol) {
      // Tracked margins drift across many rank-1 updates; accept only if
      // the residual survives an exact recomputation.
      MaxMarginSolution sol = finish(true);
      if (sol.converged) return sol;
      refresh_margins();
      continue;
    }
    if (alpha_sum > kAlphaSumGuard && terms.min_margin < 0.5) {
      std::vector<double> primal;
      rebuild_primal(primal);
      throw InfeasibleError(
          "solve_max_margin: dual diverging, data is not separable at unit "
          "margin",
          alpha_sum, norm(primal), terms.min_margin, sweep);
    }
    if (cached && sweep % 512 == 0) refresh_margins();
  }
  return finish(false);
}

bool is_separable(const Dataset& dataset) {
  try {
    return solve_max_margin(dataset).converged;
  } catch (const InfeasibleError&) {
    return false;
  }
}

double direction_gap(const Weights& a, const Weights& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("direction_gap: dimension mismatch");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= 0.0 || nb <= 0.0) {
    throw std::invalid_argument("direction_gap: zero vector has no direction");
  }
  const double gap = 1.0 - dot(a.w, b.w) / (na * nb);
  return std::clamp(gap, 0.0, 2.0);
}

std::string max_margin_json(const MaxMarginSolution& solution) {
  std::string out = "{\"alphas\":[";
  for (std::size_t i = 0; i < solution.alphas.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(solution.alphas[i]);
  }
  out += "],\"converged\":";
  out += solution.converged ? "true" : "false";
  out += ",\"kkt_residual\":" + format_double(solution.kkt_residual);
  out += ",\"w\":" + weights_json_array(solution.w);
  out += '}';
  return out;
}

}  // namespace overfitlab
