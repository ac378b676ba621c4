#pragma once

// Exact integer / rational helpers shared by every module.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace otclimb {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Mass is always counted in integer units; a measure carries the exact
// rational mass of one unit.
using Units = std::int64_t;

// Bad or inconsistent input (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input whose model has no solution (CLI exit code 3).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace exact {

inline std::int64_t to_int64(const BigInt& v, const char* what) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min()) {
    throw InputError(std::string(what) + ": value exceeds 64-bit range");
  }
  return static_cast<std::int64_t>(v);
}

inline BigInt isqrt_floor(const BigInt& x) {
  if (x < 0) throw std::domain_error("isqrt of negative value");
  return boost::multiprecision::sqrt(x);
}

inline BigInt isqrt_ceil(const BigInt& x) {
  BigInt r = isqrt_floor(x);
  return r * r == x ? r : r + 1;
}

inline bool is_perfect_square(const BigInt& x) {
  if (x < 0) return false;
  BigInt r = isqrt_floor(x);
  return r * r == x;
}

// ceil(a / b) for b > 0.
inline BigInt ceil_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if (q * b != a && a > 0) ++q;
  return q;
}

inline BigInt ceil(const Rational& r) {
  return ceil_div(boost::multiprecision::numerator(r),
                  boost::multiprecision::denominator(r));
}

inline BigInt pow2(int e) {
  BigInt one = 1;
  return one << e;
}

// 2^e as an exact rational, e of either sign.
inline Rational pow2_rational(int e) {
  return e >= 0 ? Rational(pow2(e)) : Rational(BigInt(1), pow2(-e));
}

// Every finite double is a dyadic rational; this returns it exactly.
inline Rational pow(const Rational& base, unsigned exponent) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  return Rational(boost::multiprecision::pow(BigInt(numerator(base)), exponent),
                  boost::multiprecision::pow(BigInt(denominator(base)), exponent));
}

inline Rational from_double(double v) {
  if (!(v == v) || v == std::numeric_limits<double>::infinity() ||
      v == -std::numeric_limits<double>::infinity()) {
    throw InputError("non-finite value where a real number was expected");
  }
  int exp = 0;
  double mant = std::frexp(v, &exp);
  // mant * 2^53 is an exact integer.
  auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  Rational r(scaled);
  return r * pow2_rational(exp - 53);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational parse_rational(const std::string& text) {
  // Accepts "a/b", integers and plain decimals ("0.975"); decimals are read
  // digit by digit so 0.975 becomes exactly 39/40.
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(text.substr(0, slash));
    Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw InputError("zero denominator in '" + text + "'");
    return num / den;
  }
  if (text.empty()) throw InputError("empty number");
  std::size_t i = 0;
  bool neg = false;
  if (text[0] == '-' || text[0] == '+') {
    neg = text[0] == '-';
    i = 1;
  }
  BigInt num = 0;
  BigInt den = 1;
  bool seen_dot = false;
  bool any_digit = false;
  for (; i < text.size(); ++i) {
    char ch = text[i];
    if (ch == '.' && !seen_dot) {
      seen_dot = true;
    } else if (ch >= '0' && ch <= '9') {
      num = num * 10 + (ch - '0');
      if (seen_dot) den *= 10;
      any_digit = true;
    } else {
      throw InputError("not a number: '" + text + "'");
    }
  }
  if (!any_digit) throw InputError("not a number: '" + text + "'");
  Rational r(num, den);
  return neg ? Rational(-r) : r;
}

}  // namespace exact
}  // namespace otclimb
