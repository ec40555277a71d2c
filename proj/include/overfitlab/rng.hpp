#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace overfitlab {

inline constexpr std::uint64_t kSplitMixIncrement = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output function (Steele, Lea & Flood avalanche finalizer).
inline std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// SplitMix64 counter-based generator. The stream for a given seed is a fixed
// sequence of 64-bit words, so every consumer that draws the same number of
// values sees identical bytes on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += kSplitMixIncrement;
    return splitmix64_finalize(state_);
  }

  // Uniform in [0,1) built from the top 53 bits of one output word.
  double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Fills `out` with N(0, sigma^2) deviates via Box-Muller. Each pair of
// outputs consumes exactly two uniforms; for odd lengths the second member
// of the final pair is discarded rather than cached across calls, so the
// number of stream words consumed depends only on out.size().
void fill_gaussian(Rng& rng, double sigma, std::span<double> out);

// Single deviate; consumes two uniforms (the cosine branch of one pair).
double next_gaussian(Rng& rng, double sigma);

// Fisher-Yates shuffle of {0,...,n-1}, drawing one uniform per position in
// ascending order. n = 0 yields an empty permutation.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

// Collision-resistant per-cell seed for grid sweeps: mixes the grid indices
// into the base seed with distinct odd multipliers, then avalanches. Equal
// inputs give equal seeds on every platform.
std::uint64_t cell_seed(std::uint64_t base_seed, std::uint64_t i_n,
                        std::uint64_t i_p, std::uint64_t i_rho,
                        std::uint64_t rep) noexcept;

// Stable derived seed for independent sub-streams (trial k of a checker,
// instance k of a battery).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

}  // namespace overfitlab
