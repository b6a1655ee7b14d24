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

#include "svl/term.hpp"

#include <stdexcept>

namespace svl {

namespace {

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial out;
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

std::string mono_string(const Monomial& m) {
  std::string s;
  for (const auto& [sym, pow] : m) {
    if (!s.empty()) s += "*";
    s += sym;
    if (pow > 1) s += "^" + std::to_string(pow);
  }
  return s;
}

}  // namespace

Poly::Poly(Rational c) {
  if (c != 0) terms_[Monomial{}] = std::move(c);
}

Poly Poly::symbol(const std::string& name) {
  Poly p;
  p.terms_[Monomial{{name, 1}}] = Rational(1);
  return p;
}

Poly Poly::monomial(const Monomial& m, const Rational& c) {
  Poly p;
  p.add_term(m, c);
  return p;
}

bool Poly::is_const() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Rational Poly::const_value() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? Rational(0) : it->second;
}

Rational Poly::leading_coeff() const {
  if (terms_.empty()) return Rational(0);
  return terms_.rbegin()->second;
}

void Poly::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Poly Poly::operator-(const Poly& o) const {
  Poly r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  Poly r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) r.add_term(mono_mul(ma, mb), ca * cb);
  }
  return r;
}

Poly Poly::scaled(const Rational& k) const {
  Poly r;
  if (k == 0) return r;
  for (const auto& [m, c] : terms_) r.terms_[m] = c * k;
  return r;
}

Poly Poly::subst(const std::string& sym, const Rational& value) const {
  Poly r;
  for (const auto& [m, c] : terms_) {
    Monomial rest;
    Rational coeff = c;
    for (const auto& [s, pow] : m) {
      if (s == sym) {
        for (int i = 0; i < pow; ++i) coeff *= value;
      } else {
        rest.emplace_back(s, pow);
      }
    }
    r.add_term(rest, coeff);
  }
  return r;
}

void Poly::collect_symbols(std::set<std::string>& out) const {
  for (const auto& [m, c] : terms_) {
    for (const auto& [s, pow] : m) out.insert(s);
  }
}

std::string Poly::to_string() const {
  if (terms_.empty()) return "0";
  std::string s;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [m, c] = *it;
    bool neg = c < 0;
    Rational mag = neg ? Rational(-c) : c;
    if (first) {
      if (neg) s += "-";
    } else {
      s += neg ? " - " : " + ";
    }
    first = false;
    if (m.empty()) {
      s += rational_to_string(mag);
    } else {
      if (mag != 1) s += rational_to_string(mag) + "*";
      s += mono_string(m);
    }
  }
  return s;
}

Term::Term(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw std::domain_error("division by zero");
  if (num_.is_zero()) {
    den_ = Poly(Rational(1));
    return;
  }
  if (den_.is_const()) {
    num_ = num_.scaled(1 / den_.const_value());
    den_ = Poly(Rational(1));
    return;
  }
  // Cancel the common monomial factor.
  std::map<std::string, int> common;
  bool init = false;
  for (const Poly* p : {&num_, &den_}) {
    for (const auto& [m, c] : p->terms()) {
      std::map<std::string, int> here(m.begin(), m.end());
      if (!init) {
        common = here;
        init = true;
        continue;
      }
      for (auto it = common.begin(); it != common.end();) {
        auto h = here.find(it->first);
        if (h == here.end()) {
          it = common.erase(it);
        } else {
          it->second = std::min(it->second, h->second);
          ++it;
        }
      }
    }
  }
  if (!common.empty()) {
    auto divide = [&](const Poly& p) {
      Poly r;
      for (const auto& [m, c] : p.terms()) {
        Monomial nm;
        for (const auto& [s, pow] : m) {
          int left = pow - (common.count(s) ? common.at(s) : 0);
          if (left > 0) nm.emplace_back(s, left);
        }
        r = r + Poly::monomial(nm, c);
      }
      return r;
    };
    num_ = divide(num_);
    den_ = divide(den_);
    if (den_.is_const()) {
      num_ = num_.scaled(1 / den_.const_value());
      den_ = Poly(Rational(1));
      return;
    }
  }
  Rational k = den_.leading_coeff();
  num_ = num_.scaled(1 / k);
  den_ = den_.scaled(1 / k);
  // num = q * den for a constant q.
  Rational q = num_.leading_coeff();
  if (num_.terms().rbegin()->first == den_.terms().rbegin()->first && den_.scaled(q) == num_) {
    num_ = Poly(q);
    den_ = Poly(Rational(1));
  }
}

Term Term::symbol(const std::string& name) { return Term(Poly::symbol(name), Poly(Rational(1))); }

Rational Term::const_value() const { return num_.const_value() / den_.const_value(); }

Term Term::operator+(const Term& o) const {
  if (den_ == o.den_) return Term(num_ + o.num_, den_);
  return Term(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

Term Term::operator-(const Term& o) const {
  if (den_ == o.den_) return Term(num_ - o.num_, den_);
  return Term(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

Term Term::operator*(const Term& o) const { return Term(num_ * o.num_, den_ * o.den_); }

Term Term::operator/(const Term& o) const { return Term(num_ * o.den_, den_ * o.num_); }

void Term::collect_symbols(std::set<std::string>& out) const {
  num_.collect_symbols(out);
  den_.collect_symbols(out);
}

std::string Term::to_string() const {
  if (den_.is_const()) return num_.to_string();
  auto wrap = [](const Poly& p) {
    std::string s = p.to_string();
    return p.terms().size() > 1 ? "(" + s + ")" : s;
  };
  return wrap(num_) + "/" + wrap(den_);
}

Formula Formula::truth(bool b) {
  Formula f;
  f.kind = b ? Kind::True : Kind::False;
  return f;
}

Formula Formula::atom(Poly p, Rel rel) {
  if (p.is_const()) {
    Rational c = p.const_value();
    switch (rel) {
      case Rel::Ge: return truth(c >= 0);
      case Rel::Gt: return truth(c > 0);
      case Rel::Eq: return truth(c == 0);
      case Rel::Ne: return truth(c != 0);
    }
  }
  Formula f;
  f.kind = Kind::Atom;
  f.rel = rel;
  f.poly = std::move(p);
  return f;
}

void Formula::collect_symbols(std::set<std::string>& out) const {
  if (kind == Kind::Atom) poly.collect_symbols(out);
  for (const auto& k : kids) k.collect_symbols(out);
}

std::string Formula::to_string() const {
  switch (kind) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: {
      static const char* ops[] = {" >= 0", " > 0", " == 0", " != 0"};
      return poly.to_string() + ops[static_cast<int>(rel)];
    }
    case Kind::Not: return "!(" + kids[0].to_string() + ")";
    case Kind::And:
    case Kind::Or: {
      std::string s = "(";
      for (size_t i = 0; i < kids.size(); ++i) {
        if (i) s += kind == Kind::And ? " && " : " || ";
        s += kids[i].to_string();
      }
      return s + ")";
    }
  }
  return "?";
}

Formula f_and(std::vector<Formula> parts) {
  Formula out;
  out.kind = Formula::Kind::And;
  for (auto& p : parts) {
    if (p.is_false()) return Formula::truth(false);
    if (p.is_true()) continue;
    if (p.kind == Formula::Kind::And) {
      for (auto& k : p.kids) out.kids.push_back(std::move(k));
    } else {
      out.kids.push_back(std::move(p));
    }
  }
  if (out.kids.empty()) return Formula::truth(true);
  if (out.kids.size() == 1) return std::move(out.kids[0]);
  return out;
}

Formula f_and(Formula a, Formula b) {
  std::vector<Formula> v;
  v.push_back(std::move(a));
  v.push_back(std::move(b));
  return f_and(std::move(v));
}

Formula f_or(std::vector<Formula> parts) {
  Formula out;
  out.kind = Formula::Kind::Or;
  for (auto& p : parts) {
    if (p.is_true()) return Formula::truth(true);
    if (p.is_false()) continue;
    if (p.kind == Formula::Kind::Or) {
      for (auto& k : p.kids) out.kids.push_back(std::move(k));
    } else {
      out.kids.push_back(std::move(p));
    }
  }
  if (out.kids.empty()) return Formula::truth(false);
  if (out.kids.size() == 1) return std::move(out.kids[0]);
  return out;
}

Formula f_or(Formula a, Formula b) {
  std::vector<Formula> v;
  v.push_back(std::move(a));
  v.push_back(std::move(b));
  return f_or(std::move(v));
}

Formula f_not(Formula a) {
  switch (a.kind) {
    case Formula::Kind::True: return Formula::truth(false);
    case Formula::Kind::False: return Formula::truth(true);
    case Formula::Kind::Atom:
      switch (a.rel) {
        case Rel::Ge: return Formula::atom(-a.poly, Rel::Gt);
        case Rel::Gt: return Formula::atom(-a.poly, Rel::Ge);
        case Rel::Eq: return Formula::atom(a.poly, Rel::Ne);
        case Rel::Ne: return Formula::atom(a.poly, Rel::Eq);
      }
      break;
    case Formula::Kind::Not: return a.kids[0];
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<Formula> neg;
      for (auto& k : a.kids) neg.push_back(f_not(std::move(k)));
      return a.kind == Formula::Kind::And ? f_or(std::move(neg)) : f_and(std::move(neg));
    }
  }
  return a;
}

Formula f_implies(Formula a, Formula b) { return f_or(f_not(std::move(a)), std::move(b)); }

Formula compare(const Term& a, const std::string& op, const Term& b) {
  Term d;
  Rel rel;
  if (op == "==" || op == "!=") {
    d = a - b;
    rel = op == "==" ? Rel::Eq : Rel::Ne;
  } else if (op == ">=" || op == ">") {
    d = a - b;
    rel = op == ">=" ? Rel::Ge : Rel::Gt;
  } else if (op == "<=" || op == "<") {
    d = b - a;
    rel = op == "<=" ? Rel::Ge : Rel::Gt;
  } else {
    throw std::invalid_argument("unknown comparison " + op);
  }
  if (d.den().is_const() || rel == Rel::Eq || rel == Rel::Ne) return Formula::atom(d.num(), rel);
  // Sign of the denominator decides the direction.
  return f_or(f_and(Formula::atom(d.den(), Rel::Gt), Formula::atom(d.num(), rel)),
              f_and(Formula::atom(-d.den(), Rel::Gt), Formula::atom(-d.num(), rel)));
}

}  // namespace svl
