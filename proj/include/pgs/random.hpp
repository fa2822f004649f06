#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace pgs {

/// Uniform integer in [0, bound) via rejection sampling on the raw engine
/// output. Unlike std::uniform_int_distribution the produced sequence does
/// not depend on the standard library implementation.
inline std::uint64_t uniform_index(std::mt19937_64& eng, std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("uniform_index: bound must be positive");
  }
  const std::uint64_t rem =
      (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
  if (rem == 0) {
    return eng() % bound;
  }
  const std::uint64_t limit = std::uint64_t(0) - rem;  // 2^64 - rem
  std::uint64_t v = eng();
  while (v >= limit) {
    v = eng();
  }
  return v % bound;
}

/// k distinct values from {0, ..., n-1}, sorted ascending.
inline std::vector<int> sample_without_replacement(std::mt19937_64& eng, int n,
                                                   int k) {
  if (k < 0 || n < 0 || k > n) {
    throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
  }
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + int(uniform_index(eng, std::uint64_t(n - i)));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pgs
