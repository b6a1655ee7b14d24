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

#include "svl/fraction.hpp"

namespace svl {

Fraction::Fraction(BigInt num, BigInt den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_ == 0) throw std::domain_error("fraction with zero denominator");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  if (num_ < 0 || num_ > den_) {
    throw std::domain_error("fraction outside [0,1]: " + num_.str() + "/" + den_.str());
  }
  if (num_ == 0) {
    den_ = 1;
    return;
  }
  BigInt g = boost::multiprecision::gcd(num_, den_);
  num_ /= g;
  den_ /= g;
}

Fraction::Fraction(const Rational& value)
    : Fraction(boost::multiprecision::numerator(value), boost::multiprecision::denominator(value)) {}

std::string Fraction::to_string() const {
  if (den_ == 1) return num_.str();
  return num_.str() + "/" + den_.str();
}

Fraction frac_add(const Fraction& a, const Fraction& b) {
  BigInt num = a.numerator() * b.denominator() + b.numerator() * a.denominator();
  BigInt den = a.denominator() * b.denominator();
  if (num > den) {
    throw OverflowError("permission sum " + a.to_string() + " + " + b.to_string() + " exceeds 1");
  }
  return Fraction(std::move(num), std::move(den));
}

Fraction frac_cutoff_sub(const Fraction& a, const Fraction& b) {
  BigInt lhs = a.numerator() * b.denominator();
  BigInt rhs = b.numerator() * a.denominator();
  if (lhs <= rhs) return Fraction::zero();
  return Fraction(lhs - rhs, a.denominator() * b.denominator());
}

std::strong_ordering frac_cmp(const Fraction& a, const Fraction& b) {
  BigInt lhs = a.numerator() * b.denominator();
  BigInt rhs = b.numerator() * a.denominator();
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Fraction parse_fraction(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Fraction(BigInt(text), 1);
    return Fraction(BigInt(text.substr(0, slash)), BigInt(text.substr(slash + 1)));
  } catch (const std::runtime_error&) {
    throw std::domain_error("malformed fraction: " + text);
  }
}

std::string rational_to_string(const Rational& r) {
  auto num = boost::multiprecision::numerator(r);
  auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

}  // namespace svl
