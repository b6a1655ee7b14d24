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

#include "svl/solver.hpp"

#include <algorithm>
#include <optional>

namespace svl {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

BigInt floor_div(const BigInt& n, const BigInt& d) {
  BigInt q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) q -= 1;
  return q;
}

BigInt floor_of(const Rational& r) { return floor_div(numerator(r), denominator(r)); }
BigInt ceil_of(const Rational& r) { return -floor_of(-r); }

std::string mono_key(const Monomial& m) {
  std::string s;
  for (const auto& [sym, pow] : m) {
    if (!s.empty()) s += "*";
    s += sym;
    if (pow > 1) s += "^" + std::to_string(pow);
  }
  return s;
}

struct Atom {
  Poly p;
  Rel rel;  // Ge, Gt or Eq
};

/// sum a_k * x_k + c  (>= | > | ==)  0
struct Lin {
  std::map<std::string, Rational> a;
  Rational c;
  Rel rel = Rel::Ge;
};

enum class Status { Keep, True, False };

class Solver {
 public:
  Solver(const SortMap& sorts, const SolverLimits& limits) : sorts_(sorts), limits_(limits) {}

  /// True when the conjunction of `todo` is unsatisfiable.
  bool refute(std::vector<Atom> atoms, std::vector<Formula> todo) {
    std::vector<Formula> ors;
    while (!todo.empty()) {
      Formula f = std::move(todo.back());
      todo.pop_back();
      switch (f.kind) {
        case Formula::Kind::True: break;
        case Formula::Kind::False: return true;
        case Formula::Kind::And:
          for (auto& k : f.kids) todo.push_back(std::move(k));
          break;
        case Formula::Kind::Or: ors.push_back(std::move(f)); break;
        case Formula::Kind::Not: todo.push_back(f_not(std::move(f.kids[0]))); break;
        case Formula::Kind::Atom:
          if (f.rel == Rel::Ne) {
            ors.push_back(f_or(Formula::atom(f.poly, Rel::Gt), Formula::atom(-f.poly, Rel::Gt)));
          } else {
            atoms.push_back({std::move(f.poly), f.rel});
          }
          break;
      }
    }
    if (ors.empty()) {
      if (++leaves_ > limits_.max_leaves) return false;
      return infeasible(atoms, 0);
    }
    if (infeasible(atoms, limits_.split_depth)) return true;
    Formula pick = std::move(ors.back());
    ors.pop_back();
    for (auto& alt : pick.kids) {
      std::vector<Formula> next = ors;
      next.push_back(alt);
      if (!refute(atoms, std::move(next))) return false;
      if (leaves_ > limits_.max_leaves) return false;
    }
    return true;
  }

 private:
  bool is_int_mono(const Monomial& m) const {
    for (const auto& [s, pow] : m) {
      auto it = sorts_.find(s);
      if (it == sorts_.end() || it->second == Sort::Frac) return false;
    }
    return true;
  }

  bool integral(const Lin& l) const {
    for (const auto& [k, v] : l.a) {
      if (!int_keys_.count(k)) return false;
    }
    return true;
  }

  Status normalize(Lin& l) const {
    for (auto it = l.a.begin(); it != l.a.end();) {
      it = it->second == 0 ? l.a.erase(it) : std::next(it);
    }
    if (l.a.empty()) {
      switch (l.rel) {
        case Rel::Ge: return l.c >= 0 ? Status::True : Status::False;
        case Rel::Gt: return l.c > 0 ? Status::True : Status::False;
        default: return l.c == 0 ? Status::True : Status::False;
      }
    }
    if (integral(l)) {
      BigInt m = denominator(l.c);
      for (const auto& [k, v] : l.a) m = boost::multiprecision::lcm(m, denominator(v));
      BigInt g = 0;
      for (auto& [k, v] : l.a) {
        v *= m;
        g = boost::multiprecision::gcd(g, numerator(v));
      }
      l.c *= m;
      if (g < 0) g = -g;
      if (l.rel == Rel::Gt) {
        l.c -= 1;
        l.rel = Rel::Ge;
      }
      if (l.rel == Rel::Eq) {
        if (numerator(l.c) % g != 0) return Status::False;
        l.c /= g;
      } else {
        l.c = Rational(floor_div(numerator(l.c), g));
      }
      for (auto& [k, v] : l.a) v /= g;
    } else {
      Rational lead = l.a.begin()->second;
      if (lead < 0) lead = -lead;
      for (auto& [k, v] : l.a) v /= lead;
      l.c /= lead;
    }
    return Status::Keep;
  }

  static std::string key(const Lin& l) {
    std::string s = std::to_string(static_cast<int>(l.rel)) + "|" + rational_to_string(l.c);
    for (const auto& [k, v] : l.a) s += "|" + k + ":" + rational_to_string(v);
    return s;
  }

  static Lin combine(const Lin& x, const Rational& kx, const Lin& y, const Rational& ky) {
    Lin r;
    for (const auto& [k, v] : x.a) r.a[k] += v * kx;
    for (const auto& [k, v] : y.a) r.a[k] += v * ky;
    r.c = x.c * kx + y.c * ky;
    r.rel = x.rel;
    return r;
  }

  /// Fourier-Motzkin over monomials; true when provably infeasible.
  bool fm_infeasible(const std::vector<Atom>& atoms) {
    std::vector<Lin> eqs, ineqs;
    int_keys_.clear();
    for (const auto& at : atoms) {
      Lin l;
      l.rel = at.rel;
      for (const auto& [m, c] : at.p.terms()) {
        if (m.empty()) {
          l.c = c;
          continue;
        }
        std::string k = mono_key(m);
        if (is_int_mono(m)) int_keys_.insert(k);
        l.a[k] = c;
      }
      (l.rel == Rel::Eq ? eqs : ineqs).push_back(std::move(l));
    }
    auto admit = [&](Lin l, std::vector<Lin>& into) {
      Status st = normalize(l);
      if (st == Status::False) return false;
      if (st == Status::Keep) into.push_back(std::move(l));
      return true;
    };
    {
      std::vector<Lin> e2, i2;
      for (auto& l : eqs) {
        if (!admit(l, e2)) return true;
      }
      for (auto& l : ineqs) {
        if (!admit(l, i2)) return true;
      }
      eqs = std::move(e2);
      ineqs = std::move(i2);
    }
    // Gaussian elimination of equalities.
    while (!eqs.empty()) {
      size_t best = 0;
      std::string var;
      bool unit = false;
      for (size_t i = 0; i < eqs.size() && !unit; ++i) {
        for (const auto& [k, v] : eqs[i].a) {
          bool u = v == 1 || v == -1;
          if (var.empty() || (u && !unit)) {
            best = i;
            var = k;
            unit = u;
            if (u) break;
          }
        }
      }
      Lin eq = eqs[best];
      eqs.erase(eqs.begin() + static_cast<long>(best));
      Rational a = eq.a.at(var);
      auto eliminate = [&](std::vector<Lin>& v) {
        std::vector<Lin> out;
        for (auto& l : v) {
          auto it = l.a.find(var);
          if (it == l.a.end()) {
            out.push_back(std::move(l));
            continue;
          }
          Rational b = it->second;
          Lin r = combine(l, Rational(1), eq, -b / a);
          r.rel = l.rel;
          r.a.erase(var);
          if (!admit(std::move(r), out)) return false;
        }
        v = std::move(out);
        return true;
      };
      if (!eliminate(eqs) || !eliminate(ineqs)) return true;
    }
    // Fourier-Motzkin on inequalities.
    while (true) {
      std::map<std::string, std::pair<int, int>> counts;
      for (const auto& l : ineqs) {
        for (const auto& [k, v] : l.a) {
          auto& c = counts[k];
          (v > 0 ? c.first : c.second)++;
        }
      }
      if (counts.empty()) return false;
      std::string var;
      long best = -1;
      for (const auto& [k, c] : counts) {
        long cost = static_cast<long>(c.first) * c.second;
        if (best < 0 || cost < best) {
          best = cost;
          var = k;
        }
      }
      std::vector<Lin> pos, neg, rest;
      for (auto& l : ineqs) {
        auto it = l.a.find(var);
        if (it == l.a.end()) {
          rest.push_back(std::move(l));
        } else {
          (it->second > 0 ? pos : neg).push_back(std::move(l));
        }
      }
      std::set<std::string> seen;
      for (const auto& l : rest) seen.insert(key(l));
      for (const auto& p : pos) {
        for (const auto& n : neg) {
          Rational ap = p.a.at(var), an = n.a.at(var);
          Lin r = combine(p, -an, n, ap);
          r.a.erase(var);
          r.rel = (p.rel == Rel::Gt || n.rel == Rel::Gt) ? Rel::Gt : Rel::Ge;
          Status st = normalize(r);
          if (st == Status::False) return true;
          if (st == Status::True) continue;
          if (seen.insert(key(r)).second) rest.push_back(std::move(r));
        }
      }
      if (static_cast<int>(rest.size()) > limits_.max_constraints) return false;
      ineqs = std::move(rest);
    }
  }

  bool infeasible(const std::vector<Atom>& atoms, int depth) {
    if (fm_infeasible(atoms)) return true;
    if (depth >= limits_.split_depth) return false;
    // Candidate: an integer symbol inside a nonlinear monomial.
    std::set<std::string> candidates;
    for (const auto& at : atoms) {
      for (const auto& [m, c] : at.p.terms()) {
        bool nonlinear = m.size() > 1 || (m.size() == 1 && m[0].second > 1);
        if (!nonlinear) continue;
        for (const auto& [s, pow] : m) {
          auto it = sorts_.find(s);
          if (it != sorts_.end() && it->second != Sort::Frac) candidates.insert(s);
        }
      }
    }
    for (const auto& sym : candidates) {
      std::optional<BigInt> lo, hi;
      for (const auto& at : atoms) {
        const auto& t = at.p.terms();
        if (t.size() > 2) continue;
        Rational a, c;
        bool only = true;
        for (const auto& [m, k] : t) {
          if (m.empty()) {
            c = k;
          } else if (m.size() == 1 && m[0].first == sym && m[0].second == 1) {
            a = k;
          } else {
            only = false;
          }
        }
        if (!only || a == 0) continue;
        Rational bound = -c / a;
        auto upd_lo = [&](BigInt v) { if (!lo || v > *lo) lo = v; };
        auto upd_hi = [&](BigInt v) { if (!hi || v < *hi) hi = v; };
        if (at.rel == Rel::Eq) {
          upd_lo(ceil_of(bound));
          upd_hi(floor_of(bound));
        } else if (a > 0) {
          upd_lo(at.rel == Rel::Gt ? floor_of(bound) + 1 : ceil_of(bound));
        } else {
          upd_hi(at.rel == Rel::Gt ? ceil_of(bound) - 1 : floor_of(bound));
        }
      }
      if (!lo || !hi) continue;
      if (*hi < *lo) return true;
      if (*hi - *lo + 1 > limits_.split_range) continue;
      for (BigInt v = *lo; v <= *hi; ++v) {
        std::vector<Atom> sub;
        for (const auto& at : atoms) sub.push_back({at.p.subst(sym, Rational(v)), at.rel});
        if (!infeasible(sub, depth + 1)) return false;
      }
      return true;
    }
    return false;
  }

  const SortMap& sorts_;
  const SolverLimits& limits_;
  std::set<std::string> int_keys_;
  int leaves_ = 0;
};

std::vector<Formula> cone(const std::vector<Formula>& facts, const Formula& goal) {
  std::set<std::string> syms;
  goal.collect_symbols(syms);
  std::vector<bool> taken(facts.size(), false);
  std::vector<std::set<std::string>> fsyms(facts.size());
  for (size_t i = 0; i < facts.size(); ++i) facts[i].collect_symbols(fsyms[i]);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < facts.size(); ++i) {
      if (taken[i]) continue;
      bool hit = facts[i].is_false() ||
                 std::any_of(fsyms[i].begin(), fsyms[i].end(), [&](const auto& s) { return syms.count(s); });
      if (!hit) continue;
      taken[i] = true;
      syms.insert(fsyms[i].begin(), fsyms[i].end());
      changed = true;
    }
  }
  std::vector<Formula> out;
  for (size_t i = 0; i < facts.size(); ++i) {
    if (taken[i]) out.push_back(facts[i]);
  }
  return out;
}

}  // namespace

bool entails(const std::vector<Formula>& facts, const Formula& goal, const SortMap& sorts,
             const SolverLimits& limits) {
  if (goal.is_true()) return true;
  std::vector<Formula> todo = goal.is_false() ? facts : cone(facts, goal);
  todo.push_back(f_not(goal));
  Solver s(sorts, limits);
  return s.refute({}, std::move(todo));
}

bool satisfiable(const std::vector<Formula>& facts, const SortMap& sorts, const SolverLimits& limits) {
  return !entails(facts, Formula::truth(false), sorts, limits);
}

}  // namespace svl
