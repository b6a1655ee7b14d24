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

#include "svl/symheap.hpp"

#include <algorithm>
#include <sstream>

#include "svl/frontend.hpp"

namespace svl {

namespace {

constexpr int kMaxIteration = 256;

bool capped(const Chunk& c) { return c.kind == Chunk::Kind::PointsTo || c.name == kHandle; }

bool same_key(const Chunk& a, const Chunk& b) {
  return a.kind == b.kind && a.receiver == b.receiver && a.name == b.name && a.args == b.args;
}

Term one() { return Term(1LL); }

}  // namespace

std::string Chunk::to_string() const {
  std::string s = receiver == kThis && kind == Kind::Pred ? "" : receiver + ".";
  if (kind == Kind::PointsTo) return s + name + " |-> " + value.to_string() + " @ " + perm.to_string();
  s += name + "(";
  for (size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + args[i].to_string();
  return s + ") @ " + perm.to_string();
}

Sort sort_of(Type t) {
  switch (t) {
    case Type::Frac: return Sort::Frac;
    case Type::Bool: return Sort::Bool;
    case Type::Role: return Sort::Role;
    default: return Sort::Int;
  }
}

Term SymbolicHeap::fresh(const std::string& hint, Sort sort) {
  return declare(hint + "#" + std::to_string(++fresh_counter), sort);
}

Term SymbolicHeap::declare(const std::string& name, Sort sort) {
  Term t = Term::symbol(name);
  if (sorts.emplace(name, sort).second) {
    switch (sort) {
      case Sort::Int: break;
      case Sort::Frac:
      case Sort::Bool:
        assume(compare(t, ">=", Term(0LL)));
        assume(compare(t, "<=", one()));
        break;
      case Sort::Role:
        assume(compare(t, ">=", Term(0LL)));
        assume(compare(t, "<=", Term(static_cast<long long>(role_count - 1))));
        break;
    }
  }
  return t;
}

void SymbolicHeap::assume(const Formula& f) {
  if (f.is_true()) return;
  if (std::find(facts.begin(), facts.end(), f) != facts.end()) return;
  facts.push_back(f);
}

bool SymbolicHeap::proves(const Formula& f) const {
  if (f.is_true()) return true;
  return entails(facts, f, sorts);
}

bool SymbolicHeap::possible(const Formula& f) const { return !proves(f_not(f)); }

bool SymbolicHeap::provably_zero(const Term& t) const {
  if (t.is_zero()) return true;
  if (t.is_const()) return false;
  return proves(compare(t, "==", Term(0LL)));
}

bool SymbolicHeap::provably_equal(const Term& a, const Term& b) const {
  if (a == b) return true;
  Term d = a - b;
  if (d.is_const()) return d.is_zero();
  return proves(compare(d, "==", Term(0LL)));
}

void SymbolicHeap::normalize() {
  std::vector<Chunk> out;
  for (auto& c : chunks) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Chunk& o) { return same_key(o, c); });
    if (it == out.end()) {
      out.push_back(std::move(c));
      continue;
    }
    it->perm = it->perm + c.perm;
    if (c.kind == Chunk::Kind::PointsTo && !(it->value == c.value)) assume(compare(it->value, "==", c.value));
  }
  out.erase(std::remove_if(out.begin(), out.end(), [&](const Chunk& c) { return provably_zero(c.perm); }),
            out.end());
  chunks = std::move(out);
}

std::string SymbolicHeap::render() const {
  std::ostringstream os;
  os << "heap {";
  for (const auto& c : chunks) os << "\n  " << c.to_string();
  os << (chunks.empty() ? "}" : "\n}");
  os << "\npure {";
  for (const auto& f : facts) os << "\n  " << f.to_string();
  os << (facts.empty() ? "}" : "\n}");
  if (inconsistent) os << "\ninconsistent";
  return os.str();
}

bool chunks_equivalent(const SymbolicHeap& h, std::vector<Chunk> a, std::vector<Chunk> b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& x : a) {
    bool found = false;
    for (size_t i = 0; i < b.size() && !found; ++i) {
      const auto& y = b[i];
      if (used[i] || x.kind != y.kind || x.receiver != y.receiver || x.name != y.name ||
          x.args.size() != y.args.size()) {
        continue;
      }
      bool eq = h.provably_equal(x.perm, y.perm);
      if (eq && x.kind == Chunk::Kind::PointsTo) eq = h.provably_equal(x.value, y.value);
      for (size_t j = 0; eq && j < x.args.size(); ++j) eq = h.provably_equal(x.args[j], y.args[j]);
      if (eq) {
        used[i] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

HeapOps::HeapOps(const ClassDecl& cls, int backtrack_limit) : cls_(cls), backtrack_limit_(backtrack_limit) {}

bool HeapOps::is_group(const std::string& pred) const {
  if (pred == kHandle) return true;
  const PredicateDecl* pd = cls_.find_predicate(pred);
  return pd && pd->group;
}

Term HeapOps::field_value(const std::string& field, const SymbolicHeap& h, SourceLoc loc) const {
  for (const auto& c : h.chunks) {
    if (c.kind == Chunk::Kind::PointsTo && c.receiver == kThis && c.name == field) return c.value;
  }
  throw EvalError(loc, "no permission to read field '" + field + "'");
}

std::vector<Alt<bool>> HeapOps::fork(const SymbolicHeap& h, const Formula& g) const {
  if (g.is_true()) return {{h, true}};
  if (g.is_false()) return {{h, false}};
  bool can_true = h.possible(g);
  bool can_false = h.possible(f_not(g));
  std::vector<Alt<bool>> out;
  if (can_true) {
    out.push_back({h, true});
    if (can_false) out.back().heap.assume(g);
  }
  if (can_false) {
    out.push_back({h, false});
    if (can_true) out.back().heap.assume(f_not(g));
  }
  return out;
}

std::vector<Alt<Term>> HeapOps::eval_term(const Expr& e, const SymbolicHeap& h, const Env& env) const {
  using K = Expr::Kind;
  auto single = [&](Term t) { return std::vector<Alt<Term>>{{h, std::move(t)}}; };
  auto from_formula = [&]() {
    std::vector<Alt<Term>> out;
    for (auto& f : eval_formula(e, h, env)) {
      for (auto& b : fork(f.heap, f.value)) out.push_back({std::move(b.heap), Term(b.value ? 1LL : 0LL)});
    }
    return out;
  };
  switch (e.kind) {
    case K::IntLit: return single(Term(Rational(e.int_value)));
    case K::BoolLit: return single(Term(e.bool_value ? 1LL : 0LL));
    case K::Result: {
      auto it = env.vars.find("\\result");
      if (it == env.vars.end()) throw EvalError(e.loc, "\\result is not available here");
      return single(it->second);
    }
    case K::Existential:
    case K::Var: {
      switch (e.binding) {
        case Binding::Role: return single(Term(static_cast<long long>(cls_.role_index(e.name))));
        case Binding::FinalField: {
          auto it = env.fields.find(e.name);
          if (it == env.fields.end()) throw EvalError(e.loc, "final field '" + e.name + "' has no value");
          return single(it->second);
        }
        case Binding::GhostField: {
          // Class ghost parameters are constants of the object.
          auto it = env.fields.find(e.name);
          if (it != env.fields.end()) return single(it->second);
          return single(field_value(e.name, h, e.loc));
        }
        case Binding::Field: return single(field_value(e.name, h, e.loc));
        case Binding::CellField: throw EvalError(e.loc, "atomic cell '" + e.name + "' used as a value");
        default: {
          auto it = env.vars.find(e.binding == Binding::Result ? "\\result" : e.name);
          if (it == env.vars.end()) {
            throw EvalError(e.loc, (e.binding == Binding::Existential ? "unbound existential '" : "unbound variable '") +
                                       e.name + "'");
          }
          return single(it->second);
        }
      }
    }
    case K::Unary:
      if (e.op == "-") {
        auto xs = eval_term(*e.args[0], h, env);
        for (auto& x : xs) x.value = -x.value;
        return xs;
      }
      return from_formula();
    case K::Binary: {
      static const std::set<std::string> arith = {"+", "-", "*", "/", "%"};
      if (!arith.count(e.op)) return from_formula();
      std::vector<Alt<Term>> out;
      for (auto& a : eval_term(*e.args[0], h, env)) {
        for (auto& b : eval_term(*e.args[1], a.heap, env)) {
          const Term& x = a.value;
          const Term& y = b.value;
          if (e.op == "+") {
            out.push_back({std::move(b.heap), x + y});
          } else if (e.op == "*") {
            out.push_back({std::move(b.heap), x * y});
          } else if (e.op == "-" && e.type == Type::Frac) {
            // Fractions subtract with cut-off at zero.
            for (auto& br : fork(b.heap, compare(x, ">=", y))) {
              out.push_back({std::move(br.heap), br.value ? x - y : Term(0LL)});
            }
          } else if (e.op == "-") {
            out.push_back({std::move(b.heap), x - y});
          } else if (e.op == "/") {
            if (y.is_zero() || b.heap.provably_zero(y)) throw EvalError(e.loc, "division by zero");
            out.push_back({std::move(b.heap), x / y});
          } else {
            if (!x.is_const() || !y.is_const() || y.is_zero()) {
              throw EvalError(e.loc, "modulus needs constant operands");
            }
            Rational xv = x.const_value(), yv = y.const_value();
            if (denominator(xv) != 1 || denominator(yv) != 1) throw EvalError(e.loc, "modulus of a fraction");
            out.push_back({std::move(b.heap), Term(Rational(numerator(xv) % numerator(yv)))});
          }
        }
      }
      return out;
    }
    case K::Ternary: {
      std::vector<Alt<Term>> out;
      for (auto& c : eval_formula(*e.args[0], h, env)) {
        for (auto& br : fork(c.heap, c.value)) {
          for (auto& v : eval_term(*e.args[br.value ? 1 : 2], br.heap, env)) out.push_back(std::move(v));
        }
      }
      return out;
    }
    case K::Call: {
      if (e.call != CallKind::Function) throw EvalError(e.loc, "'" + e.name + "' is not a pure function");
      const FunctionDecl* fd = cls_.find_function(e.name);
      if (!fd || !fd->expr) throw EvalError(e.loc, "function '" + e.name + "' cannot be evaluated");
      if (fd->return_type == Type::Bool) return from_formula();
      std::vector<Alt<Term>> out;
      std::vector<Alt<std::vector<Term>>> args{{h, {}}};
      for (const auto& a : e.args) {
        std::vector<Alt<std::vector<Term>>> next;
        for (auto& prev : args) {
          for (auto& v : eval_term(*a, prev.heap, env)) {
            auto vals = prev.value;
            vals.push_back(std::move(v.value));
            next.push_back({std::move(v.heap), std::move(vals)});
          }
        }
        args = std::move(next);
      }
      for (auto& a : args) {
        Env inner;
        inner.fields = env.fields;
        for (size_t i = 0; i < fd->params.size(); ++i) inner.vars[fd->params[i].name] = a.value[i];
        for (auto& v : eval_term(*fd->expr, a.heap, inner)) out.push_back(std::move(v));
      }
      return out;
    }
    default: break;
  }
  throw EvalError(e.loc, "expression '" + expr_to_string(e) + "' has no symbolic value");
}

std::vector<Alt<Formula>> HeapOps::eval_formula(const Expr& e, const SymbolicHeap& h, const Env& env) const {
  using K = Expr::Kind;
  auto pairwise = [&](const Expr& a, const Expr& b, auto combine) {
    std::vector<Alt<Formula>> out;
    for (auto& x : eval_formula(a, h, env)) {
      for (auto& y : eval_formula(b, x.heap, env)) out.push_back({std::move(y.heap), combine(x.value, y.value)});
    }
    return out;
  };
  switch (e.kind) {
    case K::BoolLit: return {{h, Formula::truth(e.bool_value)}};
    case K::Unary:
      if (e.op == "!") {
        auto xs = eval_formula(*e.args[0], h, env);
        for (auto& x : xs) x.value = f_not(std::move(x.value));
        return xs;
      }
      break;
    case K::Binary: {
      const std::string& op = e.op;
      if (op == "&&") return pairwise(*e.args[0], *e.args[1], [](Formula a, Formula b) { return f_and(a, b); });
      if (op == "||") return pairwise(*e.args[0], *e.args[1], [](Formula a, Formula b) { return f_or(a, b); });
      if (op == "==>") {
        return pairwise(*e.args[0], *e.args[1], [](Formula a, Formula b) { return f_implies(a, b); });
      }
      if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") {
        if (e.args[0]->type == Type::Bool && (op == "==" || op == "!=")) {
          bool eq = op == "==";
          return pairwise(*e.args[0], *e.args[1], [eq](Formula a, Formula b) {
            Formula same = f_or(f_and(a, b), f_and(f_not(a), f_not(b)));
            return eq ? same : f_not(same);
          });
        }
        std::vector<Alt<Formula>> out;
        for (auto& a : eval_term(*e.args[0], h, env)) {
          for (auto& b : eval_term(*e.args[1], a.heap, env)) {
            out.push_back({std::move(b.heap), compare(a.value, op, b.value)});
          }
        }
        return out;
      }
      break;
    }
    case K::Ternary: {
      std::vector<Alt<Formula>> out;
      for (auto& c : eval_formula(*e.args[0], h, env)) {
        for (auto& a : eval_formula(*e.args[1], c.heap, env)) {
          for (auto& b : eval_formula(*e.args[2], a.heap, env)) {
            out.push_back({std::move(b.heap), f_or(f_and(c.value, a.value), f_and(f_not(c.value), b.value))});
          }
        }
      }
      return out;
    }
    case K::Call:
      if (e.call == CallKind::Function) {
        const FunctionDecl* fd = cls_.find_function(e.name);
        if (fd && fd->expr && fd->return_type == Type::Bool) {
          std::vector<Alt<Formula>> out;
          std::vector<Alt<std::vector<Term>>> args{{h, {}}};
          for (const auto& a : e.args) {
            std::vector<Alt<std::vector<Term>>> next;
            for (auto& prev : args) {
              for (auto& v : eval_term(*a, prev.heap, env)) {
                auto vals = prev.value;
                vals.push_back(std::move(v.value));
                next.push_back({std::move(v.heap), std::move(vals)});
              }
            }
            args = std::move(next);
          }
          for (auto& a : args) {
            Env inner;
            inner.fields = env.fields;
            for (size_t i = 0; i < fd->params.size(); ++i) inner.vars[fd->params[i].name] = a.value[i];
            for (auto& v : eval_formula(*fd->expr, a.heap, inner)) out.push_back(std::move(v));
          }
          return out;
        }
      }
      break;
    default: break;
  }
  std::vector<Alt<Formula>> out;
  for (auto& t : eval_term(e, h, env)) out.push_back({std::move(t.heap), compare(t.value, "!=", Term(0LL))});
  return out;
}

void HeapOps::add_chunk(SymbolicHeap& h, Chunk c) const {
  if (h.provably_zero(c.perm)) return;
  auto it = std::find_if(h.chunks.begin(), h.chunks.end(), [&](const Chunk& o) { return same_key(o, c); });
  const Chunk* merged = nullptr;
  if (it != h.chunks.end()) {
    it->perm = it->perm + c.perm;
    if (c.kind == Chunk::Kind::PointsTo && !(it->value == c.value)) h.assume(compare(it->value, "==", c.value));
    merged = &*it;
  } else {
    h.chunks.push_back(std::move(c));
    merged = &h.chunks.back();
  }
  if (capped(*merged)) {
    Formula over = compare(merged->perm, ">", one());
    if (merged->perm.is_const() ? merged->perm.const_value() > 1 : h.proves(over)) {
      h.inconsistent = true;
    } else {
      h.assume(f_not(over));
    }
  }
}

std::vector<Alt<HeapOps::Instance>> HeapOps::eval_instance(const Resource& r, const SymbolicHeap& h,
                                                           const Env& env) const {
  Instance base;
  base.name = r.name;
  base.receiver = kThis;
  if (r.receiver && r.receiver->kind == Expr::Kind::Var && r.receiver->binding == Binding::CellField) {
    base.receiver = r.receiver->name;
  }
  bool group = is_group(r.name);
  size_t nargs = r.args.size() - (group ? 1 : 0);
  std::vector<Alt<Instance>> out{{h, base}};
  for (size_t i = 0; i < nargs; ++i) {
    const Expr& a = *r.args[i];
    bool unbound_existential =
        (a.kind == Expr::Kind::Existential || (a.kind == Expr::Kind::Var && a.binding == Binding::Existential)) &&
        !env.vars.count(a.name);
    if (a.kind == Expr::Kind::Wildcard || unbound_existential) {
      for (auto& o : out) {
        o.value.args.push_back(std::nullopt);
        o.value.binders.push_back(unbound_existential ? a.name : "");
      }
      continue;
    }
    std::vector<Alt<Instance>> next;
    for (auto& o : out) {
      for (auto& v : eval_term(a, o.heap, env)) {
        Instance inst = o.value;
        inst.args.push_back(std::move(v.value));
        inst.binders.push_back("");
        next.push_back({std::move(v.heap), std::move(inst)});
      }
    }
    out = std::move(next);
  }
  if (!group) {
    for (auto& o : out) o.value.scale = one();
    return out;
  }
  std::vector<Alt<Instance>> next;
  for (auto& o : out) {
    for (auto& v : eval_term(*r.args.back(), o.heap, env)) {
      Instance inst = o.value;
      inst.scale = std::move(v.value);
      next.push_back({std::move(v.heap), std::move(inst)});
    }
  }
  return next;
}

namespace {

std::vector<Sort> arg_sorts(const ClassDecl& cls, const std::string& pred, size_t n) {
  std::vector<Sort> out(n, Sort::Int);
  if (pred == kHandle) {
    if (n > 0) out[0] = Sort::Role;
    return out;
  }
  if (const PredicateDecl* pd = cls.find_predicate(pred)) {
    for (size_t i = 0; i < n && i < pd->params.size(); ++i) out[i] = sort_of(pd->params[i].type);
  }
  return out;
}

/// Integer bounds on `sym` implied by the conjunctive part of `f`.
bool bounds_of(const Formula& f, const std::string& sym, BigInt& lo, BigInt& hi) {
  bool has_lo = false, has_hi = false;
  std::vector<const Formula*> todo{&f};
  while (!todo.empty()) {
    const Formula* g = todo.back();
    todo.pop_back();
    if (g->kind == Formula::Kind::And) {
      for (const auto& k : g->kids) todo.push_back(&k);
      continue;
    }
    if (g->kind != Formula::Kind::Atom || g->rel == Rel::Ne) continue;
    Rational a, c;
    bool ok = true;
    for (const auto& [m, k] : g->poly.terms()) {
      if (m.empty()) {
        c = k;
      } else if (m.size() == 1 && m[0].first == sym && m[0].second == 1) {
        a = k;
      } else {
        ok = false;
      }
    }
    if (!ok || a == 0) continue;
    Rational b = -c / a;
    BigInt fl = numerator(b) / denominator(b);
    if (fl * denominator(b) > numerator(b)) fl -= 1;
    BigInt ce = fl * denominator(b) == numerator(b) ? fl : fl + 1;
    auto set_lo = [&](BigInt v) { if (!has_lo || v > lo) lo = v; has_lo = true; };
    auto set_hi = [&](BigInt v) { if (!has_hi || v < hi) hi = v; has_hi = true; };
    if (g->rel == Rel::Eq) {
      set_lo(ce);
      set_hi(fl);
    } else if (a > 0) {
      set_lo(g->rel == Rel::Gt ? fl + 1 : ce);
    } else {
      set_hi(g->rel == Rel::Gt ? ce - 1 : fl);
    }
  }
  return has_lo && has_hi;
}

}  // namespace

/// Values of the binder of an iterated star, in increasing order.
static std::vector<Alt<Term>> iteration_range(const HeapOps& ops, const Resource& r, const SymbolicHeap& h,
                                              const Env& env) {
  Env probe = env;
  std::string sym = r.binder + "#range";
  probe.vars[r.binder] = Term::symbol(sym);
  auto conds = ops.eval_formula(*r.cond, h, probe);
  BigInt lo, hi;
  if (conds.size() != 1 || !bounds_of(conds[0].value, sym, lo, hi) || hi - lo + 1 > kMaxIteration) {
    throw UnboundedIteration(r.loc, "cannot bound the range of '" + r.binder + "'");
  }
  std::vector<Alt<Term>> out;
  for (BigInt k = lo; k <= hi; ++k) {
    Env at = env;
    at.vars[r.binder] = Term(Rational(k));
    for (auto& c : ops.eval_formula(*r.cond, h, at)) {
      for (auto& b : ops.fork(c.heap, c.value)) {
        if (b.value) out.push_back({b.heap, Term(Rational(k))});
      }
    }
  }
  return out;
}

std::vector<Outcome> HeapOps::produce_all(std::vector<Outcome> os, const Resource& r) const {
  std::vector<Outcome> out;
  for (auto& o : os) {
    for (auto& x : produce(std::move(o), r)) out.push_back(std::move(x));
  }
  return out;
}

std::vector<Outcome> HeapOps::produce(Outcome o, const Resource& r) const {
  using K = Resource::Kind;
  switch (r.kind) {
    case K::Emp: return {std::move(o)};
    case K::Pure: {
      std::vector<Outcome> out;
      for (auto& f : eval_formula(*r.cond, o.heap, o.env)) {
        Outcome x{std::move(f.heap), o.env, o.failures};
        x.heap.assume(f.value);
        out.push_back(std::move(x));
      }
      return out;
    }
    case K::PointsTo: {
      std::vector<Outcome> out;
      for (auto& p : eval_term(*r.perm, o.heap, o.env)) {
        Outcome x{std::move(p.heap), o.env, o.failures};
        const Expr& v = *r.value;
        bool unbound = (v.kind == Expr::Kind::Existential || v.binding == Binding::Existential) &&
                       !x.env.vars.count(v.name);
        std::vector<Alt<Term>> vals;
        if (v.kind == Expr::Kind::Wildcard || unbound) {
          Term t = x.heap.fresh(r.name, Sort::Int);
          if (unbound) x.env.vars[v.name] = t;
          vals.push_back({x.heap, t});
        } else {
          vals = eval_term(v, x.heap, x.env);
        }
        for (auto& val : vals) {
          Outcome y{std::move(val.heap), x.env, x.failures};
          Chunk c;
          c.kind = Chunk::Kind::PointsTo;
          c.receiver = kThis;
          c.name = r.name;
          c.perm = p.value;
          c.value = val.value;
          add_chunk(y.heap, std::move(c));
          out.push_back(std::move(y));
        }
      }
      return out;
    }
    case K::Pred: {
      std::vector<Outcome> out;
      for (auto& inst : eval_instance(r, o.heap, o.env)) {
        Outcome x{std::move(inst.heap), o.env, o.failures};
        auto sorts = arg_sorts(cls_, r.name, inst.value.args.size());
        Chunk c;
        c.kind = Chunk::Kind::Pred;
        c.receiver = inst.value.receiver;
        c.name = r.name;
        c.perm = inst.value.scale;
        for (size_t i = 0; i < inst.value.args.size(); ++i) {
          if (inst.value.args[i]) {
            c.args.push_back(*inst.value.args[i]);
            continue;
          }
          const std::string& b = inst.value.binders[i];
          Term t = x.heap.fresh(b.empty() ? "_" : b, sorts[i]);
          if (!b.empty()) x.env.vars[b] = t;
          c.args.push_back(t);
        }
        add_chunk(x.heap, std::move(c));
        out.push_back(std::move(x));
      }
      return out;
    }
    case K::Star: return produce_all(produce(std::move(o), *r.left), *r.right);
    case K::Implies: {
      std::vector<Outcome> out;
      for (auto& f : eval_formula(*r.cond, o.heap, o.env)) {
        for (auto& b : fork(f.heap, f.value)) {
          Outcome x{std::move(b.heap), o.env, o.failures};
          if (b.value) {
            for (auto& y : produce(std::move(x), *r.right)) out.push_back(std::move(y));
          } else {
            out.push_back(std::move(x));
          }
        }
      }
      return out;
    }
    case K::IterStar: {
      std::vector<Outcome> cur{std::move(o)};
      auto range = iteration_range(*this, r, cur[0].heap, cur[0].env);
      for (const auto& k : range) {
        std::vector<Outcome> next;
        for (auto& x : cur) {
          Env saved = x.env;
          x.env.vars[r.binder] = k.value;
          for (auto& y : produce(std::move(x), *r.right)) {
            y.env = saved;
            next.push_back(std::move(y));
          }
        }
        cur = std::move(next);
      }
      return cur;
    }
  }
  return {std::move(o)};
}

std::vector<Outcome> HeapOps::consume(Outcome o, const Resource& r) const {
  return consume_k(std::move(o), r, [](Outcome x) { return std::vector<Outcome>{std::move(x)}; });
}

std::vector<Outcome> HeapOps::consume_pred(Outcome o, const std::string& receiver, const std::string& name,
                                           const std::vector<std::optional<Term>>& args, const Term& scale,
                                           SourceLoc loc) const {
  std::string text = (receiver == kThis ? "" : receiver + ".") + name + "(";
  for (size_t i = 0; i < args.size(); ++i) text += (i ? ", " : "") + (args[i] ? args[i]->to_string() : "_");
  text += ") @ " + scale.to_string();
  return consume_pred_k(std::move(o), receiver, name, args, std::vector<std::string>(args.size()), scale, loc, text,
                        [](Outcome x) { return std::vector<Outcome>{std::move(x)}; });
}

std::vector<Outcome> HeapOps::consume_pred_k(Outcome o, const std::string& receiver, const std::string& name,
                                             const std::vector<std::optional<Term>>& args,
                                             const std::vector<std::string>& binders, const Term& scale,
                                             SourceLoc loc, const std::string& text, const Cont& k) const {
  auto sorts = arg_sorts(cls_, name, args.size());
  auto bind_fresh = [&](Outcome& x) {
    for (size_t i = 0; i < binders.size(); ++i) {
      if (!binders[i].empty() && !x.env.vars.count(binders[i])) {
        x.env.vars[binders[i]] = x.heap.fresh(binders[i], sorts[i]);
      }
    }
  };
  if (o.heap.provably_zero(scale)) {
    bind_fresh(o);
    return k(std::move(o));
  }
  std::vector<std::string> candidates;
  std::optional<std::vector<Outcome>> fallback;
  int attempts = 0;
  bool exhausted = false;
  for (size_t i = 0; i < o.heap.chunks.size(); ++i) {
    const Chunk& c = o.heap.chunks[i];
    if (c.kind != Chunk::Kind::Pred || c.receiver != receiver || c.name != name || c.args.size() != args.size()) {
      continue;
    }
    candidates.push_back(c.to_string());
    bool match = true;
    for (size_t j = 0; match && j < args.size(); ++j) {
      if (args[j]) match = o.heap.provably_equal(c.args[j], *args[j]);
    }
    if (!match) continue;
    if (!(c.perm == scale) && !o.heap.proves(compare(c.perm, ">=", scale))) continue;
    if (attempts++ >= backtrack_limit_) {
      exhausted = true;
      break;
    }
    Outcome x = o;
    for (size_t j = 0; j < binders.size(); ++j) {
      if (!binders[j].empty()) x.env.vars[binders[j]] = c.args[j];
    }
    Chunk& taken = x.heap.chunks[i];
    taken.perm = taken.perm - scale;
    if (x.heap.provably_zero(taken.perm)) x.heap.chunks.erase(x.heap.chunks.begin() + static_cast<long>(i));
    size_t before = o.failures.size();
    auto result = k(std::move(x));
    bool clean = std::all_of(result.begin(), result.end(), [&](const Outcome& r) { return r.failures.size() == before; });
    if (clean) return result;
    if (!fallback) fallback = std::move(result);
  }
  if (fallback) {
    if (exhausted) {
      for (auto& r : *fallback) r.failures.push_back({loc, text, "backtracking limit exceeded", candidates});
    }
    return std::move(*fallback);
  }
  Failure f{loc, text, candidates.empty() ? "no matching chunk" : "insufficient permission or argument mismatch",
            candidates};
  o.failures.push_back(std::move(f));
  bind_fresh(o);
  return k(std::move(o));
}

std::vector<Outcome> HeapOps::consume_k(Outcome o, const Resource& r, const Cont& k) const {
  using K = Resource::Kind;
  switch (r.kind) {
    case K::Emp: return k(std::move(o));
    case K::Pure: {
      std::vector<Outcome> out;
      for (auto& f : eval_formula(*r.cond, o.heap, o.env)) {
        Outcome x{std::move(f.heap), o.env, o.failures};
        if (!x.heap.proves(f.value)) {
          x.failures.push_back({r.loc, expr_to_string(*r.cond), "cannot prove " + f.value.to_string(), {}});
        }
        for (auto& y : k(std::move(x))) out.push_back(std::move(y));
      }
      return out;
    }
    case K::PointsTo: {
      std::vector<Outcome> out;
      std::string text = resource_to_string(r);
      for (auto& p : eval_term(*r.perm, o.heap, o.env)) {
        Outcome x{std::move(p.heap), o.env, o.failures};
        const Expr& v = *r.value;
        bool unbound = (v.kind == Expr::Kind::Existential || v.binding == Binding::Existential) &&
                       !x.env.vars.count(v.name);
        bool any = v.kind == Expr::Kind::Wildcard || unbound;
        std::vector<Alt<std::optional<Term>>> pats;
        if (any) {
          pats.push_back({x.heap, std::nullopt});
        } else {
          for (auto& t : eval_term(v, x.heap, x.env)) pats.push_back({std::move(t.heap), std::move(t.value)});
        }
        for (auto& pat : pats) {
          Outcome y{std::move(pat.heap), x.env, x.failures};
          auto it = std::find_if(y.heap.chunks.begin(), y.heap.chunks.end(), [&](const Chunk& c) {
            return c.kind == Chunk::Kind::PointsTo && c.receiver == kThis && c.name == r.name;
          });
          bool zero = y.heap.provably_zero(p.value);
          if (zero) {
            if (unbound) y.env.vars[v.name] = y.heap.fresh(v.name, Sort::Int);
          } else if (it == y.heap.chunks.end() || !y.heap.proves(compare(it->perm, ">=", p.value))) {
            std::vector<std::string> cands;
            if (it != y.heap.chunks.end()) cands.push_back(it->to_string());
            y.failures.push_back({r.loc, text, "insufficient permission", cands});
            if (unbound) y.env.vars[v.name] = y.heap.fresh(v.name, Sort::Int);
          } else {
            if (pat.value && !y.heap.provably_equal(it->value, *pat.value)) {
              y.failures.push_back({r.loc, text, "value mismatch", {it->to_string()}});
            }
            if (unbound) y.env.vars[v.name] = it->value;
            it->perm = it->perm - p.value;
            if (y.heap.provably_zero(it->perm)) y.heap.chunks.erase(it);
          }
          for (auto& z : k(std::move(y))) out.push_back(std::move(z));
        }
      }
      return out;
    }
    case K::Pred: {
      std::vector<Outcome> out;
      std::string text = resource_to_string(r);
      for (auto& inst : eval_instance(r, o.heap, o.env)) {
        Outcome x{std::move(inst.heap), o.env, o.failures};
        const Instance& in = inst.value;
        std::string needed = (in.receiver == kThis ? "" : in.receiver + ".") + in.name + "(";
        for (size_t i = 0; i < in.args.size(); ++i) needed += (i ? ", " : "") + (in.args[i] ? in.args[i]->to_string() : "_");
        needed += ") @ " + in.scale.to_string();
        std::string full = needed == text ? text : text + " needs " + needed;
        for (auto& y : consume_pred_k(std::move(x), in.receiver, in.name, in.args, in.binders, in.scale, r.loc, full, k)) {
          out.push_back(std::move(y));
        }
      }
      return out;
    }
    case K::Star: {
      const Resource* right = r.right.get();
      return consume_k(std::move(o), *r.left, [this, right, &k](Outcome x) { return consume_k(std::move(x), *right, k); });
    }
    case K::Implies: {
      std::vector<Outcome> out;
      for (auto& f : eval_formula(*r.cond, o.heap, o.env)) {
        for (auto& b : fork(f.heap, f.value)) {
          Outcome x{std::move(b.heap), o.env, o.failures};
          auto ys = b.value ? consume_k(std::move(x), *r.right, k) : k(std::move(x));
          for (auto& y : ys) out.push_back(std::move(y));
        }
      }
      return out;
    }
    case K::IterStar: {
      auto range = iteration_range(*this, r, o.heap, o.env);
      std::vector<Term> values;
      for (const auto& a : range) values.push_back(a.value);
      std::function<std::vector<Outcome>(Outcome, size_t)> step = [&](Outcome x, size_t i) {
        if (i == values.size()) return k(std::move(x));
        Env saved = x.env;
        x.env.vars[r.binder] = values[i];
        return consume_k(std::move(x), *r.right, [&, saved, i](Outcome y) {
          y.env = saved;
          return step(std::move(y), i + 1);
        });
      };
      return step(std::move(o), 0);
    }
  }
  return k(std::move(o));
}

Env HeapOps::body_env(const PredicateDecl& pd, const Instance& inst, const Env& outer) const {
  Env env;
  env.fields = outer.fields;
  for (size_t i = 0; i < inst.args.size() && i < pd.params.size(); ++i) {
    if (inst.args[i]) env.vars[pd.params[i].name] = *inst.args[i];
  }
  if (pd.group && !pd.params.empty()) env.vars[pd.params.back().name] = inst.scale;
  return env;
}

std::vector<Outcome> HeapOps::fold(Outcome o, const Resource& instance) const {
  const PredicateDecl* pd = cls_.find_predicate(instance.name);
  if (!pd || !pd->body) throw EvalError(instance.loc, "cannot fold '" + instance.name + "'");
  std::vector<Outcome> out;
  for (auto& inst : eval_instance(instance, o.heap, o.env)) {
    Outcome x{std::move(inst.heap), o.env, o.failures};
    for (const auto& a : inst.value.args) {
      if (!a) throw EvalError(instance.loc, "fold needs concrete arguments");
    }
    Env outer = x.env;
    x.env = body_env(*pd, inst.value, outer);
    for (auto& y : consume(std::move(x), *pd->body)) {
      y.env = outer;
      Chunk c;
      c.kind = Chunk::Kind::Pred;
      c.receiver = kThis;
      c.name = pd->name;
      for (const auto& a : inst.value.args) c.args.push_back(*a);
      c.perm = inst.value.scale;
      add_chunk(y.heap, std::move(c));
      out.push_back(std::move(y));
    }
  }
  return out;
}

std::vector<Outcome> HeapOps::unfold(Outcome o, const Resource& instance) const {
  const PredicateDecl* pd = cls_.find_predicate(instance.name);
  if (!pd || !pd->body) throw EvalError(instance.loc, "cannot unfold '" + instance.name + "'");
  std::vector<Outcome> out;
  for (auto& inst : eval_instance(instance, o.heap, o.env)) {
    Outcome x{std::move(inst.heap), o.env, o.failures};
    std::string text = resource_to_string(instance);
    auto taken = consume_pred_k(std::move(x), kThis, pd->name, inst.value.args, inst.value.binders, inst.value.scale,
                                instance.loc, text, [](Outcome y) { return std::vector<Outcome>{std::move(y)}; });
    for (auto& y : taken) {
      Env outer = y.env;
      Instance bound = inst.value;
      for (size_t i = 0; i < bound.args.size(); ++i) {
        if (bound.args[i]) continue;
        if (bound.binders[i].empty()) throw EvalError(instance.loc, "unfold needs named arguments");
        bound.args[i] = outer.vars.at(bound.binders[i]);
      }
      y.env = body_env(*pd, bound, outer);
      for (auto& z : produce(std::move(y), *pd->body)) {
        z.env = outer;
        out.push_back(std::move(z));
      }
    }
  }
  return out;
}

}  // namespace svl
