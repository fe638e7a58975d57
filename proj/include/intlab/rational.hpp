#pragma once

// Arbitrary-precision rationals; boost::multiprecision keeps them reduced
// with positive denominators, which is exactly the invariant needed.

#include <cstddef>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"

namespace intlab::bachet {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline BigRational make_rational(const BigInt& num, const BigInt& den) {
  if (den == 0) throw Error("rational with zero denominator");
  return BigRational(num) / BigRational(den);
}

/// Parses "p", "-p" or "p/q".
inline BigRational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return BigRational(BigInt(text));
    return make_rational(BigInt(text.substr(0, slash)),
                         BigInt(text.substr(slash + 1)));
  } catch (const std::exception&) {
    throw Error("cannot parse rational: '" + text + "'");
  }
}

inline std::string to_string(const BigRational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

inline std::size_t bit_size(const BigInt& v) {
  if (v == 0) return 1;
  return static_cast<std::size_t>(msb(abs(v))) + 1;
}

inline std::size_t bit_size(const BigRational& r) {
  return bit_size(numerator(r)) + bit_size(denominator(r));
}

inline double to_double(const BigRational& r) {
  return r.convert_to<double>();
}

} // namespace intlab::bachet
