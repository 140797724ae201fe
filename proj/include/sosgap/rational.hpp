#pragma once

#include <boost/rational.hpp>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "sosgap/errors.hpp"

// Boost 1.74's mixed rational/integer operator== recurses forever under C++20's
// rewritten comparison candidates. Exact-match overloads win overload resolution.
namespace boost {
inline bool operator==(const rational<std::int64_t>& a, std::int64_t b) {
  return a.denominator() == 1 && a.numerator() == b;
}
inline bool operator==(const rational<std::int64_t>& a, int b) {
  return a == static_cast<std::int64_t>(b);
}
}  // namespace boost

namespace sosgap {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s));
    std::int64_t den = std::stoll(s.substr(slash + 1));
    if (den == 0) throw ConfigError("zero denominator in '" + s + "'");
    return Rational(std::stoll(s.substr(0, slash)), den);
  } catch (const std::logic_error&) {
    throw ConfigError("not a rational: '" + s + "'");
  }
}

// Exact conversion of a finite double whose binary expansion fits in 62 bits.
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw ConfigError("non-finite value");
  int exp = 0;
  double mant = std::frexp(v, &exp);
  std::int64_t num = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  while (exp < 0 && num % 2 == 0) {
    num /= 2;
    ++exp;
  }
  if (exp > 0) {
    if (exp > 9) throw ConfigError("value too large for exact conversion");
    return Rational(num * (std::int64_t{1} << exp));
  }
  if (-exp > 62) throw ConfigError("value needs more than 62 fractional bits");
  return Rational(num, std::int64_t{1} << (-exp));
}

inline Rational abs(const Rational& r) { return r < 0 ? -r : r; }

// Integer power with exponent >= 0.
inline Rational pow(Rational base, int e) {
  Rational out(1);
  while (e > 0) {
    if (e & 1) out *= base;
    base *= base;
    e >>= 1;
  }
  return out;
}

}  // namespace sosgap
