#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace overfitlab {

// Thrown for filesystem problems (unreadable input, unwritable output).
// Kept separate from std::invalid_argument so callers can map the two
// failure classes to different process exit codes.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal string that round-trips to the same double.
// Locale-independent; produces "nan"/"inf" for non-finite values.
std::string format_double(double v);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double squared_norm(const std::vector<double>& v);
double norm(const std::vector<double>& v);

// y += c * x
void axpy(double c, const std::vector<double>& x, std::vector<double>& y);

// Median of the finite entries; NaN when none are finite.
double median_finite(std::vector<double> values);

}  // namespace overfitlab
