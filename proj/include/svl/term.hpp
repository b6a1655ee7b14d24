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

#ifndef SVL_TERM_HPP_
#define SVL_TERM_HPP_

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "svl/fraction.hpp"

namespace svl {

/// Symbol sorts. Booleans and roles are integers with a bounded domain.
enum class Sort { Int, Frac, Bool, Role };

using SortMap = std::map<std::string, Sort>;

/// Product of symbols with positive powers, sorted by symbol name.
using Monomial = std::vector<std::pair<std::string, int>>;

class Poly {
 public:
  Poly() = default;
  explicit Poly(Rational c);
  static Poly symbol(const std::string& name);
  static Poly monomial(const Monomial& m, const Rational& c);

  bool is_zero() const { return terms_.empty(); }
  bool is_const() const;
  Rational const_value() const;
  /// Coefficient of the monomial with the smallest ordering among
  /// non-constant ones, or the constant if there is none.
  Rational leading_coeff() const;

  const std::map<Monomial, Rational>& terms() const { return terms_; }

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly scaled(const Rational& k) const;
  Poly operator-() const { return scaled(Rational(-1)); }

  Poly subst(const std::string& sym, const Rational& value) const;
  void collect_symbols(std::set<std::string>& out) const;

  std::string to_string() const;

  friend bool operator==(const Poly&, const Poly&) = default;
  friend bool operator<(const Poly& a, const Poly& b) { return a.terms_ < b.terms_; }

 private:
  void add_term(const Monomial& m, const Rational& c);
  std::map<Monomial, Rational> terms_;
};

/**
 * Symbolic value: a quotient of polynomials with rational coefficients.
 * Integers, fractions, booleans (0/1) and roles (small integers) share
 * this representation.
 */
class Term {
 public:
  Term() : num_(), den_(Rational(1)) {}
  explicit Term(Rational c) : num_(std::move(c)), den_(Rational(1)) {}
  explicit Term(long long c) : Term(Rational(c)) {}
  explicit Term(const Fraction& f) : Term(f.value()) {}
  Term(Poly num, Poly den);
  static Term symbol(const std::string& name);

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  bool is_const() const { return num_.is_const() && den_.is_const(); }
  Rational const_value() const;
  bool is_zero() const { return num_.is_zero(); }

  Term operator+(const Term& o) const;
  Term operator-(const Term& o) const;
  Term operator*(const Term& o) const;
  Term operator/(const Term& o) const;
  Term operator-() const { return Term(-num_, den_); }

  void collect_symbols(std::set<std::string>& out) const;
  std::string to_string() const;

  friend bool operator==(const Term&, const Term&) = default;
  friend bool operator<(const Term& a, const Term& b) {
    return a.num_ < b.num_ || (a.num_ == b.num_ && a.den_ < b.den_);
  }

 private:
  Poly num_;
  Poly den_;
};

/// Comparison against zero.
enum class Rel { Ge, Gt, Eq, Ne };

/// Quantifier-free formula over polynomial atoms `p rel 0`.
struct Formula {
  enum class Kind { True, False, Atom, And, Or, Not };
  Kind kind = Kind::True;
  Rel rel = Rel::Eq;
  Poly poly;
  std::vector<Formula> kids;

  static Formula truth(bool b);
  static Formula atom(Poly p, Rel rel);

  bool is_true() const { return kind == Kind::True; }
  bool is_false() const { return kind == Kind::False; }

  void collect_symbols(std::set<std::string>& out) const;
  std::string to_string() const;

  friend bool operator==(const Formula&, const Formula&) = default;
};

Formula f_and(std::vector<Formula> parts);
Formula f_and(Formula a, Formula b);
Formula f_or(std::vector<Formula> parts);
Formula f_or(Formula a, Formula b);
Formula f_not(Formula a);
Formula f_implies(Formula a, Formula b);

/// Comparison of two terms; op is one of == != < <= > >=.
Formula compare(const Term& a, const std::string& op, const Term& b);

}  // namespace svl

#endif  // SVL_TERM_HPP_
