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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>

#include <random>

#include "svl/fraction.hpp"

using svl::Fraction;
using svl::frac_add;
using svl::frac_cutoff_sub;

namespace {

Fraction f(long n, long d) { return Fraction(n, d); }

mpq_class to_mpq(const Fraction& x) {
  mpq_class q(mpz_class(x.numerator().str()), mpz_class(x.denominator().str()));
  q.canonicalize();
  return q;
}

/// Random fraction in [0,1] with denominators up to 10^12, biased towards
/// the extremes and small denominators.
Fraction random_fraction(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 9);
  int k = kind(rng);
  if (k == 0) return Fraction::zero();
  if (k == 1) return Fraction::one();
  long long max_den = k < 5 ? 12 : 1000000000000LL;
  long long den = std::uniform_int_distribution<long long>(1, max_den)(rng);
  long long num = std::uniform_int_distribution<long long>(0, den)(rng);
  return Fraction(num, den);
}

void check_canonical(const Fraction& x) {
  CHECK(x.denominator() > 0);
  CHECK(x.numerator() >= 0);
  CHECK(x.numerator() <= x.denominator());
  CHECK(boost::multiprecision::gcd(x.numerator(), x.denominator()) == 1);
  if (x.is_zero()) CHECK(x.denominator() == 1);
}

}  // namespace

TEST_CASE("addition merges split permissions") {
  CHECK(frac_add(f(1, 2), f(1, 2)) == Fraction::one());
  CHECK(frac_add(Fraction::zero(), f(3, 7)) == f(3, 7));
  CHECK_THROWS_AS(frac_add(f(3, 4), f(1, 2)), svl::OverflowError);
}

TEST_CASE("cut-off subtraction") {
  CHECK(frac_cutoff_sub(f(3, 4), f(1, 2)) == f(1, 4));
  CHECK(frac_cutoff_sub(f(1, 4), f(1, 4)) == Fraction::zero());
  CHECK(frac_cutoff_sub(f(1, 4), f(1, 2)) == Fraction::zero());
}

TEST_CASE("comparison") {
  CHECK(svl::frac_cmp(f(1, 3), f(1, 2)) == std::strong_ordering::less);
  CHECK(svl::frac_cmp(f(2, 4), f(1, 2)) == std::strong_ordering::equal);
  CHECK(svl::frac_cmp(Fraction::one(), Fraction::zero()) == std::strong_ordering::greater);
}

TEST_CASE("construction and rendering") {
  CHECK(f(2, 4).to_string() == "1/2");
  CHECK(f(0, 5).to_string() == "0");
  CHECK(f(3, 3).to_string() == "1");
  CHECK(f(-1, -2) == f(1, 2));
  CHECK_THROWS_AS(f(3, 2), std::domain_error);
  CHECK_THROWS_AS(f(-1, 2), std::domain_error);
  CHECK_THROWS_AS(f(1, 0), std::domain_error);
  CHECK(svl::parse_fraction("6/8") == f(3, 4));
  CHECK(svl::parse_fraction("1") == Fraction::one());
  CHECK_THROWS_AS(svl::parse_fraction("a/b"), std::domain_error);
  CHECK(svl::rational_to_string(svl::Rational(-3, 6)) == "-1/2");
}

TEST_CASE("randomized laws against an independent rational oracle") {
  std::mt19937_64 rng(20240611);
  const int cases = 2000;
  int overflows = 0;
  for (int i = 0; i < cases; ++i) {
    Fraction a = random_fraction(rng), b = random_fraction(rng), c = random_fraction(rng);
    mpq_class qa = to_mpq(a), qb = to_mpq(b), qc = to_mpq(c);
    check_canonical(a);

    // Addition is exact and rejects sums above 1.
    mpq_class sum = qa + qb;
    if (sum > 1) {
      ++overflows;
      CHECK_THROWS_AS(frac_add(a, b), svl::OverflowError);
    } else {
      Fraction s = frac_add(a, b);
      check_canonical(s);
      CHECK(to_mpq(s) == sum);
      CHECK(frac_add(b, a) == s);
    }

    // Associativity wherever every intermediate sum is defined.
    if (qa + qb <= 1 && qb + qc <= 1 && qa + qb + qc <= 1) {
      CHECK(frac_add(frac_add(a, b), c) == frac_add(a, frac_add(b, c)));
    }

    // Cut-off subtraction agrees with max(a - b, 0).
    Fraction ab = frac_cutoff_sub(a, b), ba = frac_cutoff_sub(b, a);
    check_canonical(ab);
    mpq_class diff = qa - qb;
    CHECK(to_mpq(ab) == (diff > 0 ? diff : mpq_class(0)));

    // Complement: the two cut-offs add up to |a - b|, at most one is nonzero.
    CHECK(to_mpq(frac_add(ab, ba)) == abs(diff));
    CHECK((ab.is_zero() || ba.is_zero()));

    // Identities.
    CHECK(frac_cutoff_sub(a, Fraction::zero()) == a);
    CHECK(frac_cutoff_sub(a, a) == Fraction::zero());
    CHECK(frac_cutoff_sub(Fraction::zero(), a) == Fraction::zero());

    // Split/merge inverse for b <= a.
    const Fraction& lo = qa <= qb ? a : b;
    const Fraction& hi = qa <= qb ? b : a;
    CHECK(frac_add(lo, frac_cutoff_sub(hi, lo)) == hi);

    // Ordering matches the oracle.
    auto cmp = svl::frac_cmp(a, b);
    CHECK((cmp < 0) == (qa < qb));
    CHECK((cmp == 0) == (qa == qb));
    CHECK((a == b) == (qa == qb));
  }
  CHECK(overflows > 100);
  MESSAGE(cases << " randomized cases, " << overflows << " overflowing sums");
}
