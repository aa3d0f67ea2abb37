#ifndef CAPFIX_RANDOM_H_
#define CAPFIX_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace capfix {

// mt19937_64 is specified bit-exactly by the standard; the distributions
// below are ours so that streams are identical across standard libraries.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over the bytes, finalised with splitmix64 and mixed with `seed`.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed = 0);

// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Uniform real in [0, 1) with 53 bits of mantissa.
double uniform_real(Rng& rng);

// Fisher-Yates with uniform_index.
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace capfix

#endif  // CAPFIX_RANDOM_H_
