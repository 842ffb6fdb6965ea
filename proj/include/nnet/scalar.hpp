#pragma once

// Scalar types shared by every module. Distances are either double or exact
// rationals; all algorithms are templated on that choice so brute-force
// identities can be checked with equality instead of a tolerance.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <string_view>
#include <system_error>

#include <boost/multiprecision/cpp_int.hpp>

#include "nnet/error.hpp"

namespace nnet {

using Taxon = std::size_t;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

template <class T>
struct scalar_traits {
  static constexpr bool exact = false;
  // Absolute slack for inequality checks (Kalmanson, four point).
  static T default_tolerance() { return T(1e-9); }
  // Relative slack when comparing selection criteria for ties.
  static constexpr double tie_tolerance = 1e-12;
};

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static Rational default_tolerance() { return Rational(0); }
  static constexpr double tie_tolerance = 0.0;
};

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

template <class T>
T abs_value(const T& x) {
  return x < T(0) ? T(-x) : x;
}

// `a` is smaller than `b` by more than the tie slack of T.
template <Scalar T>
bool definitely_less(const T& a, const T& b) {
  if constexpr (scalar_traits<T>::exact) {
    return a < b;
  } else {
    double scale = std::max(std::abs(a), std::abs(b));
    return a < b - scalar_traits<T>::tie_tolerance * scale;
  }
}

// Parses a decimal literal ("1.25", "-3e2", "7") into T. Rationals are parsed
// exactly, so "0.1" becomes 1/10.
template <Scalar T>
T parse_scalar(std::string_view text) {
  if (text.empty()) throw InputError("empty numeric field");
  if constexpr (std::same_as<T, double>) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw InputError("not a number: '" + std::string(text) + "'");
    }
    return value;
  } else {
    std::string_view s = text;
    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
      negative = s.front() == '-';
      s.remove_prefix(1);
    }
    long long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      std::string_view exp_text = s.substr(e + 1);
      if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
      if (exp_text.empty() || ec != std::errc() || ptr != exp_text.data() + exp_text.size()) {
        throw InputError("not a number: '" + std::string(text) + "'");
      }
      s = s.substr(0, e);
    }
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
      if (exponent != 0) throw InputError("not a number: '" + std::string(text) + "'");
      BigInt num = parse_scalar<Rational>(s.substr(0, slash)).convert_to<BigInt>();
      Rational den = parse_scalar<Rational>(s.substr(slash + 1));
      if (den == 0) throw InputError("zero denominator: '" + std::string(text) + "'");
      Rational q = Rational(num) / den;
      return negative ? Rational(-q) : q;
    }
    BigInt digits = 0;
    long long frac_digits = 0;
    bool seen_point = false, seen_digit = false;
    for (char c : s) {
      if (c == '.' && !seen_point) {
        seen_point = true;
      } else if (c >= '0' && c <= '9') {
        digits = digits * 10 + (c - '0');
        seen_digit = true;
        if (seen_point) ++frac_digits;
      } else {
        throw InputError("not a number: '" + std::string(text) + "'");
      }
    }
    if (!seen_digit) throw InputError("not a number: '" + std::string(text) + "'");
    exponent -= frac_digits;
    Rational value(digits);
    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(exponent < 0 ? -exponent : exponent));
    value = exponent < 0 ? Rational(value / Rational(scale)) : Rational(value * Rational(scale));
    return negative ? Rational(-value) : value;
  }
}

}  // namespace nnet
