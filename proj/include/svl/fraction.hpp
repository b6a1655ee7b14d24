/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SVL_FRACTION_HPP_
#define SVL_FRACTION_HPP_

#include <compare>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace svl {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Raised when a permission sum would exceed 1.
class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Exact fractional permission in [0,1].
 *
 * Always stored in lowest terms; zero is 0/1. Construction outside [0,1]
 * throws std::domain_error.
 */
class Fraction {
 public:
  Fraction() : num_(0), den_(1) {}
  Fraction(BigInt num, BigInt den);
  explicit Fraction(const Rational& value);

  static Fraction zero() { return Fraction(); }
  static Fraction one() { return Fraction(1, 1); }

  const BigInt& numerator() const { return num_; }
  const BigInt& denominator() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == den_; }

  Rational value() const { return Rational(num_, den_); }

  /// "num/den", or "0" / "1" for the extremes.
  std::string to_string() const;

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

 private:
  BigInt num_;
  BigInt den_;
};

/// a+b; throws OverflowError if the sum exceeds 1.
Fraction frac_add(const Fraction& a, const Fraction& b);

/// Cut-off subtraction: a-b when a >= b, otherwise 0.
Fraction frac_cutoff_sub(const Fraction& a, const Fraction& b);

std::strong_ordering frac_cmp(const Fraction& a, const Fraction& b);

inline std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
  return frac_cmp(a, b);
}

/// Parses "n/d", "0" or "1" (or any integer ratio within range).
Fraction parse_fraction(const std::string& text);

/// Rational rendering used throughout reports: "n/d" or an integer.
std::string rational_to_string(const Rational& r);

}  // namespace svl

#endif  // SVL_FRACTION_HPP_
