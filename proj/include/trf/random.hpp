#ifndef TRF_RANDOM_HPP
#define TRF_RANDOM_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace trf {

using Rng = std::mt19937_64;

// 53-bit uniform in [0, 1); independent of the standard library's
// distribution implementations so draws are reproducible across toolchains.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Index drawn from unnormalised nonnegative weights summing to `total`.
inline std::size_t sample_discrete(std::span<const double> weights,
                                   double total, Rng& rng) {
  double u = uniform01(rng) * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

// Fisher-Yates with uniform01, again for toolchain-independent results.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(items[i - 1], items[j]);
  }
}

std::string save_rng(const Rng& rng);
Rng load_rng(const std::string& state);

}  // namespace trf

#endif  // TRF_RANDOM_HPP
