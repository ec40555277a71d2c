#include "overfitlab/rng.hpp"

#include <cmath>
#include <numeric>

namespace overfitlab {

void fill_gaussian(Rng& rng, double sigma, std::span<double> out) {
  constexpr double kTwoPi = 6.28318530717958647692528676655900577;
  for (std::size_t k = 0; k < out.size(); k += 2) {
    double u1 = rng.next_uniform();
    const double u2 = rng.next_uniform();
    // next_uniform can return exactly 0; substitute the smallest nonzero
    // uniform so log stays finite without disturbing stream alignment.
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    out[k] = sigma * radius * std::cos(kTwoPi * u2);
    if (k + 1 < out.size()) {
      out[k + 1] = sigma * radius * std::sin(kTwoPi * u2);
    }
  }
}

double next_gaussian(Rng& rng, double sigma) {
  double v;
  fill_gaussian(rng, sigma, std::span<double>(&v, 1));
  return v;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double u = rng.next_uniform();
    std::size_t j = i + static_cast<std::size_t>(u * static_cast<double>(n - i));
    if (j >= n) j = n - 1;  // guards the u -> j rounding edge
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::uint64_t i_n,
                        std::uint64_t i_p, std::uint64_t i_rho,
                        std::uint64_t rep) noexcept {
  std::uint64_t z = base_seed;
  z ^= i_n * 0x9E3779B97F4A7C15ULL;
  z ^= i_p * 0xBF58476D1CE4E5B9ULL;
  z ^= i_rho * 0x94D049BB133111EBULL;
  z ^= rep * 0xD6E8FEB86659FD93ULL;
  return splitmix64_finalize(z);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return splitmix64_finalize(base ^ ((index + 1) * 0xD6E8FEB86659FD93ULL));
}

}  // namespace overfitlab
