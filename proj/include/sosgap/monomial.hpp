#pragma once

#include <boost/container/small_vector.hpp>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace sosgap {

// Multilinear monomial x_S: strictly increasing variable indices.
class Monomial {
 public:
  using Storage = boost::container::small_vector<std::uint32_t, 6>;

  Monomial() = default;
  Monomial(std::initializer_list<int> idx) : Monomial(std::vector<int>(idx)) {}

  // Reduces the multiset by x_i^2 = 1: indices occurring an even number of times drop out.
  explicit Monomial(std::vector<int> idx) {
    std::sort(idx.begin(), idx.end());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j < idx.size() && idx[j] == idx[i]) ++j;
      if ((j - i) % 2 == 1) v_.push_back(static_cast<std::uint32_t>(idx[i]));
      i = j;
    }
  }

  static Monomial from_sorted(const Storage& s) {
    Monomial m;
    m.v_ = s;
    return m;
  }

  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  int operator[](std::size_t i) const { return static_cast<int>(v_[i]); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }
  const Storage& storage() const { return v_; }
  int max_index() const { return v_.empty() ? -1 : static_cast<int>(v_.back()); }

  bool contains(int i) const {
    return std::binary_search(v_.begin(), v_.end(), static_cast<std::uint32_t>(i));
  }

  std::vector<int> indices() const { return {v_.begin(), v_.end()}; }

  // Graded lexicographic order: by degree first.
  friend bool operator<(const Monomial& a, const Monomial& b) {
    if (a.v_.size() != b.v_.size()) return a.v_.size() < b.v_.size();
    return std::lexicographical_compare(a.v_.begin(), a.v_.end(), b.v_.begin(), b.v_.end());
  }
  friend bool operator==(const Monomial& a, const Monomial& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Monomial& a, const Monomial& b) { return !(a == b); }

  std::string str() const {
    std::string s = "{";
    for (std::size_t i = 0; i < v_.size(); ++i) s += (i ? "," : "") + std::to_string(v_[i]);
    return s + "}";
  }

 private:
  Storage v_;
};

// x_S * x_T = x_{S xor T} on the boolean cube.
inline Monomial sym_diff(const Monomial& a, const Monomial& b) {
  Monomial::Storage out;
  out.reserve(a.size() + b.size());
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) out.push_back(*i++);
    else if (*j < *i) out.push_back(*j++);
    else { ++i; ++j; }
  }
  out.insert(out.end(), i, a.end());
  out.insert(out.end(), j, b.end());
  return Monomial::from_sorted(out);
}

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ m.size();
    for (auto v : m) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    }
    return static_cast<std::size_t>(h ^ (h >> 33));
  }
};

// All monomials of degree <= d over n variables, graded lexicographic order.
inline std::vector<Monomial> monomials_up_to(int n, int d) {
  std::vector<Monomial> out;
  std::vector<int> cur;
  for (int k = 0; k <= std::min(d, n); ++k) {
    cur.resize(k);
    for (int i = 0; i < k; ++i) cur[i] = i;
    while (true) {
      out.push_back(Monomial(cur));
      int p = k - 1;
      while (p >= 0 && cur[p] == n - k + p) --p;
      if (p < 0) break;
      ++cur[p];
      for (int q = p + 1; q < k; ++q) cur[q] = cur[q - 1] + 1;
    }
  }
  return out;
}

}  // namespace sosgap
