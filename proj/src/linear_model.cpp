#include "overfitlab/linear_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "overfitlab/util.hpp"

namespace overfitlab {

double Weights::norm() const { return overfitlab::norm(w); }

bool Weights::is_zero() const {
  for (double v : w) {
    if (v != 0.0) return false;
  }
  return true;
}

double logistic_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

void check_label(int y) {
  if (y != 1 && y != -1) {
    throw std::invalid_argument("label must be +1 or -1");
  }
}

// log(1 + exp(-m)) without overflow: for m < 0 use the identity
// log(1 + exp(-m)) = -m + log(1 + exp(m)).
double loss_from_margin(double m) {
  if (m >= 0.0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

}  // namespace

double logistic_loss(const Weights& w, const std::vector<double>& x, int y) {
  check_label(y);
  const double m = y * dot(x, w.w);
  return loss_from_margin(m);
}

std::vector<double> logistic_grad(const Weights& w,
                                  const std::vector<double>& x, int y) {
  check_label(y);
  const double m = y * dot(x, w.w);
  const double c = -static_cast<double>(y) * logistic_sigmoid(-m);
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = c * x[j];
  return g;
}

double dataset_margin(const Weights& w, const Dataset& dataset,
                      LabelMode mode) {
  if (dataset.size() == 0) {
    throw std::invalid_argument("dataset_margin: empty dataset");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Sample& s : dataset.samples) {
    const int y = mode == LabelMode::clean ? s.y_clean : s.y_obs;
    const double m = y * dot(s.x, w.w);
    if (m < best) best = m;
  }
  return best;
}

double mean_train_loss(const Weights& w, const Dataset& dataset) {
  if (dataset.size() == 0) {
    throw std::invalid_argument("mean_train_loss: empty dataset");
  }
  double total = 0.0;
  for (const Sample& s : dataset.samples) {
    const double m = s.y_obs * dot(s.x, w.w);
    total += loss_from_margin(m);
  }
  return total / static_cast<double>(dataset.size());
}

std::string weights_csv_row(const Weights& w) {
  std::string row;
  for (std::size_t j = 0; j < w.w.size(); ++j) {
    if (j > 0) row += ',';
    row += format_double(w.w[j]);
  }
  return row;
}

std::string weights_json_array(const Weights& w) {
  std::string out = "[";
  for (std::size_t j = 0; j < w.w.size(); ++j) {
    if (j > 0) out += ',';
    out += format_double(w.w[j]);
  }
  out += ']';
  return out;
}

}  // namespace overfitlab
