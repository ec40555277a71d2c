#pragma once

#include <string>
#include <vector>

#include "overfitlab/gmm.hpp"

namespace overfitlab {

// Bias-free linear classifier x -> sign(w . x).
struct Weights {
  std::vector<double> w;

  std::size_t dim() const { return w.size(); }
  double norm() const;
  bool is_zero() const;  // every entry exactly 0
};

// Numerically stable logistic sigmoid 1 / (1 + exp(-z)).
double logistic_sigmoid(double z);

// log(1 + exp(-y * (x . w))), evaluated without overflow for any margin.
double logistic_loss(const Weights& w, const std::vector<double>& x, int y);

// Gradient of logistic_loss with respect to w: -y * sigmoid(-m) * x.
std::vector<double> logistic_grad(const Weights& w,
                                  const std::vector<double>& x, int y);

enum class LabelMode { clean, observed };

// Smallest label-weighted margin min_i y_i * (x_i . w) over the dataset.
double dataset_margin(const Weights& w, const Dataset& dataset,
                      LabelMode mode);

// Mean logistic loss against the observed labels.
double mean_train_loss(const Weights& w, const Dataset& dataset);

// Comma-joined shortest round-trip decimals, in coordinate order.
std::string weights_csv_row(const Weights& w);

// JSON array of coordinates, e.g. [0.5,-1.25].
std::string weights_json_array(const Weights& w);

}  // namespace overfitlab
