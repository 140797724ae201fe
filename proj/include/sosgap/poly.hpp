#pragma once

#include <algorithm>
#include <bit>
#include <map>
#include <string>
#include <vector>

#include "sosgap/errors.hpp"
#include "sosgap/monomial.hpp"
#include "sosgap/rational.hpp"

namespace sosgap {

// Multilinear polynomial over {+-1}^nvars with exact coefficients. Zero terms are never stored.
class MultilinearPoly {
 public:
  using Terms = std::map<Monomial, Rational>;

  MultilinearPoly() = default;
  explicit MultilinearPoly(int nvars) : nvars_(nvars) {}
  MultilinearPoly(int nvars, Rational constant) : nvars_(nvars) { add_term(Monomial{}, constant); }

  static MultilinearPoly variable(int nvars, int i, Rational coeff = 1) {
    MultilinearPoly p(nvars);
    p.add_term(Monomial{i}, coeff);
    return p;
  }
  static MultilinearPoly monomial(int nvars, const Monomial& m, Rational coeff = 1) {
    MultilinearPoly p(nvars);
    p.add_term(m, coeff);
    return p;
  }

  int nvars() const { return nvars_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, static_cast<int>(m.size()));
    return d;
  }

  Rational coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  void add_term(const Monomial& m, const Rational& c) {
    if (c == 0) return;
    if (m.max_index() >= nvars_) throw InvalidInstance("monomial " + m.str() + " exceeds nvars");
    auto [it, fresh] = terms_.emplace(m, c);
    if (!fresh) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  MultilinearPoly& operator+=(const MultilinearPoly& o) {
    nvars_ = std::max(nvars_, o.nvars_);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  MultilinearPoly& operator-=(const MultilinearPoly& o) {
    nvars_ = std::max(nvars_, o.nvars_);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  MultilinearPoly& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
  }

  friend MultilinearPoly operator+(MultilinearPoly a, const MultilinearPoly& b) { return a += b; }
  friend MultilinearPoly operator-(MultilinearPoly a, const MultilinearPoly& b) { return a -= b; }
  friend MultilinearPoly operator*(MultilinearPoly a, const Rational& s) { return a *= s; }
  friend MultilinearPoly operator*(const Rational& s, MultilinearPoly a) { return a *= s; }

  // Product followed by the reduction x_i^2 = 1.
  friend MultilinearPoly operator*(const MultilinearPoly& a, const MultilinearPoly& b) {
    MultilinearPoly out(std::max(a.nvars_, b.nvars_));
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) out.add_term(sym_diff(ma, mb), ca * cb);
    return out;
  }

  friend bool operator==(const MultilinearPoly& a, const MultilinearPoly& b) {
    return a.terms_ == b.terms_;
  }

  // Value at a +-1 point.
  Rational eval(const std::vector<int>& x) const {
    if (static_cast<int>(x.size()) < nvars_) throw InvalidAssignment("point shorter than nvars");
    Rational s(0);
    for (const auto& [m, c] : terms_) {
      int sign = 1;
      for (int i : m) sign *= x[i];
      s += sign > 0 ? c : -c;
    }
    return s;
  }

  // Substitute poly sub[i] for x_i; the result lives on sub's variables.
  MultilinearPoly compose(const std::vector<MultilinearPoly>& sub, int target_nvars) const {
    if (static_cast<int>(sub.size()) < nvars_) throw InvalidInstance("compose: map too short");
    MultilinearPoly out(target_nvars);
    for (const auto& [m, c] : terms_) {
      MultilinearPoly prod(target_nvars, c);
      for (int i : m) prod = prod * sub[i];
      out += prod;
    }
    return out;
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& [m, c] : terms_) {
      if (!s.empty()) s += " + ";
      s += to_string(c);
      for (int i : m) s += "*x" + std::to_string(i);
    }
    return s;
  }

 private:
  int nvars_ = 0;
  Terms terms_;
};

// Unique multilinear interpolant of f on {+-1}^k over the given variables:
// coefficient of x_S is 2^-k sum_p f(p) chi_S(p). Points are enumerated with bit t
// of the pattern index set meaning vars[t] = -1.
inline MultilinearPoly interpolate(int nvars, const std::vector<int>& vars,
                                   const std::vector<Rational>& values) {
  const int k = static_cast<int>(vars.size());
  if (values.size() != (std::size_t{1} << k)) throw InvalidInstance("interpolate: need 2^k values");
  MultilinearPoly out(nvars);
  for (unsigned s = 0; s < (1u << k); ++s) {
    Rational c(0);
    for (unsigned p = 0; p < (1u << k); ++p) {
      bool neg = std::popcount(s & p) % 2;
      c += neg ? -values[p] : values[p];
    }
    std::vector<int> idx;
    for (int t = 0; t < k; ++t)
      if (s >> t & 1) idx.push_back(vars[t]);
    out.add_term(Monomial(idx), c / Rational(1 << k));
  }
  return out;
}

}  // namespace sosgap
