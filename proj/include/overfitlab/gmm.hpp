#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "overfitlab/rng.hpp"

namespace overfitlab {

enum class NoiseFamily { gaussian, rademacher_scaled };

// Symmetric two-cluster model: x = y * mu + eps with y uniform on {-1,+1}
// and eps coordinatewise noise of scale sigma.
struct GmmConfig {
  std::size_t p = 0;
  std::vector<double> mu;
  double sigma = 1.0;
  NoiseFamily noise_family = NoiseFamily::gaussian;

  // Throws std::invalid_argument unless p >= 1, mu has dimension p with
  // finite entries and positive norm, and sigma > 0.
  void validate() const;
};

struct Sample {
  std::vector<double> x;
  int y_clean = 0;
  int y_obs = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<char> flip_mask;  // 1 where the observed label was flipped
  double rho = 0.0;             // flip probability the labels were drawn with
  GmmConfig config;

  std::size_t size() const { return samples.size(); }
  std::size_t dim() const { return config.p; }
  std::size_t flip_count() const;

  // True iff flip_mask agrees with y_obs != y_clean everywhere and all
  // labels are in {-1,+1}.
  bool flips_consistent() const;
};

enum class SignalMode { axis, random };

// Mean vector of norm mu_norm: the first coordinate axis (axis mode) or a
// seeded random direction (random mode). The seed is only read in random
// mode.
std::vector<double> make_signal(std::size_t p, double mu_norm, SignalMode mode,
                                std::uint64_t seed = 0);

// Draws n labeled points with clean labels (y_obs == y_clean, rho == 0).
Dataset sample_noiseless(const GmmConfig& config, std::size_t n, Rng& rng);

// Independently flips each observed label with probability rho in [0, 0.5].
// The input must be uncorrupted (rho == 0 and no recorded flips).
Dataset corrupt_labels(const Dataset& dataset, double rho, Rng& rng);

// CSV with header index,y_clean,y_obs,flipped,x_0,...,x_{p-1}. Doubles are
// written as shortest round-trip decimals, rows in index order, LF endings.
void write_dataset_csv(const Dataset& dataset, std::ostream& out);
void write_dataset_csv(const Dataset& dataset, const std::string& path);

// Inverse of write_dataset_csv. The stored file does not carry the model
// parameters, so the caller supplies the mean norm and noise scale; the mean
// direction is taken as the first axis and rho is set to the empirical flip
// fraction. Malformed input raises std::invalid_argument; unreadable paths
// raise IoError.
Dataset read_dataset_csv(std::istream& in, double mu_norm, double sigma);
Dataset read_dataset_csv(const std::string& path, double mu_norm, double sigma);

}  // namespace overfitlab
