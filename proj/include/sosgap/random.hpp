#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sosgap {

using Rng = std::mt19937_64;

// std::uniform_int_distribution differs between standard libraries, which would
// break golden files; rejection sampling on the raw engine output does not.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound) - 1;
  std::uint64_t v = rng();
  while (v > limit) v = rng();
  return v % bound;
}

inline int random_sign(Rng& rng) { return (rng() >> 63) ? -1 : 1; }

inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Standard normal by Box-Muller over uniform_unit.
inline double standard_normal(Rng& rng) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

// k distinct values from [0, n), sorted; partial Fisher-Yates.
inline std::vector<int> sample_distinct(int n, int k, Rng& rng) {
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_below(rng, n - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace sosgap
