#include "overfitlab/gmm.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "overfitlab/util.hpp"

namespace overfitlab {

void GmmConfig::validate() const {
  if (p == 0) throw std::invalid_argument("GmmConfig: p must be >= 1");
  if (mu.size() != p) {
    throw std::invalid_argument("GmmConfig: mu dimension does not match p");
  }
  for (double v : mu) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("GmmConfig: mu has non-finite entries");
    }
  }
  if (norm(mu) <= 0.0) {
    throw std::invalid_argument("GmmConfig: mu must have positive norm");
  }
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw std::invalid_argument("GmmConfig: sigma must be positive");
  }
}

std::size_t Dataset::flip_count() const {
  std::size_t k = 0;
  for (char f : flip_mask) k += (f != 0);
  return k;
}

bool Dataset::flips_consistent() const {
  if (flip_mask.size() != samples.size()) return false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.y_clean != 1 && s.y_clean != -1) return false;
    if (s.y_obs != 1 && s.y_obs != -1) return false;
    const bool flipped = s.y_obs != s.y_clean;
    if (flipped != (flip_mask[i] != 0)) return false;
  }
  return true;
}

std::vector<double> make_signal(std::size_t p, double mu_norm, SignalMode mode,
                                std::uint64_t seed) {
  if (p == 0) throw std::invalid_argument("make_signal: p must be >= 1");
  if (!std::isfinite(mu_norm) || mu_norm <= 0.0) {
    throw std::invalid_argument("make_signal: mu_norm must be positive");
  }
  std::vector<double> mu(p, 0.0);
  if (mode == SignalMode::axis) {
    mu[0] = mu_norm;
    return mu;
  }
  Rng rng(seed);
  fill_gaussian(rng, 1.0, mu);
  const double len = norm(mu);
  if (len <= 0.0) {
    // Probability-zero draw; fall back to the axis direction.
    mu.assign(p, 0.0);
    mu[0] = mu_norm;
    return mu;
  }
  for (double& v : mu) v *= mu_norm / len;
  return mu;
}

Dataset sample_noiseless(const GmmConfig& config, std::size_t n, Rng& rng) {
  config.validate();
  if (n == 0) throw std::invalid_argument("sample_noiseless: n must be >= 1");
  Dataset ds;
  ds.config = config;
  ds.rho = 0.0;
  ds.samples.resize(n);
  ds.flip_mask.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    Sample& s = ds.samples[i];
    const int y = rng.next_uniform() < 0.5 ? -1 : 1;
    s.x.resize(config.p);
    switch (config.noise_family) {
      case NoiseFamily::gaussian:
        fill_gaussian(rng, config.sigma, s.x);
        break;
      case NoiseFamily::rademacher_scaled:
        for (double& v : s.x) {
          v = rng.next_uniform() < 0.5 ? -config.sigma : config.sigma;
        }
        break;
    }
    for (std::size_t j = 0; j < config.p; ++j) s.x[j] += y * config.mu[j];
    s.y_clean = y;
    s.y_obs = y;
  }
  return ds;
}

Dataset corrupt_labels(const Dataset& dataset, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 0.5)) {
    throw std::invalid_argument("corrupt_labels: rho must be in [0, 0.5]");
  }
  if (dataset.rho != 0.0 || dataset.flip_count() != 0) {
    throw std::invalid_argument("corrupt_labels: dataset already corrupted");
  }
  Dataset out = dataset;
  out.rho = rho;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    if (rng.next_uniform() < rho) {
      out.samples[i].y_obs = -out.samples[i].y_clean;
      out.flip_mask[i] = 1;
    }
  }
  return out;
}

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
  const std::size_t p = dataset.dim();
  out << "index,y_clean,y_obs,flipped";
  for (std::size_t j = 0; j < p; ++j) out << ",x_" << j;
  out << '\n';
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    out << i << ',' << s.y_clean << ',' << s.y_obs << ','
        << (dataset.flip_mask[i] ? 1 : 0);
    for (std::size_t j = 0; j < p; ++j) out << ',' << format_double(s.x[j]);
    out << '\n';
  }
  if (!out) throw IoError("write_dataset_csv: stream write failed");
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_dataset_csv: cannot open " + path);
  write_dataset_csv(dataset, out);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double_field(const std::string& s, const char* what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::invalid_argument(std::string("dataset csv: bad ") + what +
                                " field '" + s + "'");
  }
  return v;
}

long parse_int_field(const std::string& s, const char* what) {
  long v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::invalid_argument(std::string("dataset csv: bad ") + what +
                                " field '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, double mu_norm, double sigma) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("dataset csv: missing header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "index" || header[1] != "y_clean" ||
      header[2] != "y_obs" || header[3] != "flipped") {
    throw std::invalid_argument("dataset csv: unexpected header");
  }
  const std::size_t p = header.size() - 4;
  for (std::size_t j = 0; j < p; ++j) {
    if (header[4 + j] != "x_" + std::to_string(j)) {
      throw std::invalid_argument("dataset csv: unexpected feature column '" +
                                  header[4 + j] + "'");
    }
  }

  Dataset ds;
  ds.config.p = p;
  ds.config.mu = make_signal(p, mu_norm, SignalMode::axis);
  ds.config.sigma = sigma;
  ds.config.validate();

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4 + p) {
      throw std::invalid_argument("dataset csv: wrong field count in row " +
                                  std::to_string(row));
    }
    if (parse_int_field(fields[0], "index") != static_cast<long>(row)) {
      throw std::invalid_argument("dataset csv: non-sequential index in row " +
                                  std::to_string(row));
    }
    Sample s;
    s.y_clean = static_cast<int>(parse_int_field(fields[1], "y_clean"));
    s.y_obs = static_cast<int>(parse_int_field(fields[2], "y_obs"));
    const long flipped = parse_int_field(fields[3], "flipped");
    if ((s.y_clean != 1 && s.y_clean != -1) ||
        (s.y_obs != 1 && s.y_obs != -1) || (flipped != 0 && flipped != 1)) {
      throw std::invalid_argument("dataset csv: bad label fields in row " +
                                  std::to_string(row));
    }
    if ((flipped == 1) != (s.y_obs != s.y_clean)) {
      throw std::invalid_argument("dataset csv: flip flag inconsistent in row " +
                                  std::to_string(row));
    }
    s.x.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      s.x[j] = parse_double_field(fields[4 + j], "feature");
    }
    ds.samples.push_back(std::move(s));
    ds.flip_mask.push_back(flipped == 1 ? 1 : 0);
    ++row;
  }
  if (ds.samples.empty()) {
    throw std::invalid_argument("dataset csv: no data rows");
  }
  ds.rho = static_cast<double>(ds.flip_count()) /
           static_cast<double>(ds.samples.size());
  return ds;
}

Dataset read_dataset_csv(const std::string& path, double mu_norm,
                         double sigma) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_dataset_csv: cannot open " + path);
  return read_dataset_csv(in, mu_norm, sigma);
}

}  // namespace overfitlab
