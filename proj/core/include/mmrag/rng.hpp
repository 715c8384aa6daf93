#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mmrag/error.hpp"

namespace mmrag {

// SplitMix64. Used for every seeded draw in the project instead of
// <random> distributions, whose output is implementation-defined; this
// keeps seeded artifacts bit-identical across platforms and stdlibs.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n); rejection sampling.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw Error("rng_range", "next_below requires n > 0");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates with explicit draws (std::shuffle is not portable).
template <typename T>
void deterministic_shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

// First `count` elements of a seeded permutation of [0, n): a uniform
// sample without replacement, order randomized.
std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                    std::size_t count,
                                                    SplitMix64& rng);

}  // namespace mmrag
