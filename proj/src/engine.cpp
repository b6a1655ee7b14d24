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

#include "svl/engine.hpp"

#include <algorithm>
#include <chrono>

#include "svl/frontend.hpp"

namespace svl {

namespace {

using Paths = std::vector<Outcome>;

Paths pass(Paths ps, const CellContract::Checkpoint& cp, const std::string& step) {
  return cp ? cp(std::move(ps), step) : std::move(ps);
}

Term zero() { return Term(0LL); }

}  // namespace

std::string verdict_name(Verdict v) { return v == Verdict::Pass ? "pass" : "fail"; }

size_t MethodReport::failed() const {
  return static_cast<size_t>(std::count_if(obligations.begin(), obligations.end(),
                                           [](const Obligation& o) { return o.verdict == Verdict::Fail; }));
}

size_t Report::obligation_count() const {
  size_t n = 0;
  for (const auto& m : methods) n += m.obligations.size();
  return n;
}

size_t Report::failed() const {
  size_t n = 0;
  for (const auto& m : methods) n += m.failed();
  return n;
}

CellContract::CellContract(const HeapOps& ops, const FieldDecl& cell) : ops_(ops), cell_(cell) {}

std::vector<Alt<Term>> CellContract::share(const SymbolicHeap& h, const Env& env, const Term& r,
                                           const Term& v) const {
  const FunctionDecl* fd = ops_.cls().find_function(protocol().share);
  Env inner;
  inner.fields = env.fields;
  inner.vars[fd->params[0].name] = r;
  inner.vars[fd->params[1].name] = v;
  return ops_.eval_term(*fd->expr, h, inner);
}

std::vector<Alt<Formula>> CellContract::trans(const SymbolicHeap& h, const Env& env, const Term& r, const Term& c,
                                              const Term& n) const {
  const FunctionDecl* fd = ops_.cls().find_function(protocol().trans);
  Env inner;
  inner.fields = env.fields;
  inner.vars[fd->params[0].name] = r;
  inner.vars[fd->params[1].name] = c;
  inner.vars[fd->params[2].name] = n;
  return ops_.eval_formula(*fd->expr, h, inner);
}

std::optional<Term> CellContract::bound(const SymbolicHeap& h, const Env& env) const {
  const std::string& m = protocol().max;
  if (m.empty()) return std::nullopt;
  auto it = env.fields.find(m);
  if (it != env.fields.end()) return it->second;
  for (const auto& c : h.chunks) {
    if (c.kind == Chunk::Kind::PointsTo && c.receiver == kThis && c.name == m) return c.value;
  }
  return std::nullopt;
}

std::vector<Alt<Term>> CellContract::cutoff(const SymbolicHeap& h, const Term& a, const Term& b) const {
  std::vector<Alt<Term>> out;
  for (auto& br : ops_.fork(h, compare(a, ">=", b))) out.push_back({std::move(br.heap), br.value ? a - b : zero()});
  return out;
}

std::vector<Outcome> CellContract::check_trans(Outcome o, const Term& r, const Term& c, const Term& n,
                                               SourceLoc loc) const {
  Paths out;
  for (auto& t : trans(o.heap, o.env, r, c, n)) {
    Outcome x{std::move(t.heap), o.env, o.failures};
    if (!x.heap.proves(t.value)) {
      std::string role = r.to_string();
      if (r.is_const()) {
        auto names = ops_.cls().roles();
        auto q = r.const_value();
        if (q >= 0 && q < static_cast<long>(names.size()) && denominator(q) == 1) {
          role = names[static_cast<size_t>(numerator(q))];
        }
      }
      x.failures.push_back({loc, protocol().trans + "(" + role + ", " + c.to_string() + ", " + n.to_string() + ")",
                            "illegal transition", {}});
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Outcome> CellContract::consume_handle(Outcome o, const Term& r, const Term& d, const Term& p,
                                                  SourceLoc loc) const {
  return ops_.consume_pred(std::move(o), cell_.name, kHandle, {r, d}, p, loc);
}

std::vector<Outcome> CellContract::consume_inv(Outcome o, const Term& scale, SourceLoc loc) const {
  return ops_.consume_pred(std::move(o), kThis, protocol().inv, {}, scale, loc);
}

void CellContract::produce_handle(Outcome& o, const Term& r, const Term& d, const Term& p) const {
  Chunk c;
  c.kind = Chunk::Kind::Pred;
  c.receiver = cell_.name;
  c.name = kHandle;
  c.args = {r, d};
  c.perm = p;
  ops_.add_chunk(o.heap, std::move(c));
}

void CellContract::produce_inv(Outcome& o, const Term& scale) const {
  Chunk c;
  c.kind = Chunk::Kind::Pred;
  c.receiver = kThis;
  c.name = protocol().inv;
  c.perm = scale;
  ops_.add_chunk(o.heap, std::move(c));
}

std::vector<Valued> CellContract::get(Outcome o, const GhostArgs& g, SourceLoc loc, const std::string& hint,
                                      const Checkpoint& cp) const {
  Paths ps = pass(consume_handle(std::move(o), g.r, g.d, g.p, loc), cp, "handle");
  Paths consumed;
  for (auto& x : ps) {
    for (auto& s : share(x.heap, x.env, g.r, g.d)) {
      for (auto& y : consume_inv(Outcome{std::move(s.heap), x.env, x.failures}, s.value, loc)) {
        consumed.push_back(std::move(y));
      }
    }
  }
  consumed = pass(std::move(consumed), cp, "inv");
  std::vector<Valued> out;
  for (auto& x : consumed) {
    Term ret = x.heap.fresh(hint, Sort::Int);
    if (auto m = bound(x.heap, x.env)) {
      x.heap.assume(compare(ret, ">=", zero()));
      x.heap.assume(compare(ret, "<=", *m));
    }
    produce_handle(x, g.r, ret, g.p);
    for (auto& s : share(x.heap, x.env, g.r, ret)) {
      Outcome y{std::move(s.heap), x.env, x.failures};
      produce_inv(y, s.value);
      out.push_back({std::move(y), ret});
    }
  }
  return out;
}

std::vector<Outcome> CellContract::set(Outcome o, const Term& n, const GhostArgs& g, SourceLoc loc,
                                       const Checkpoint& cp) const {
  Paths ps = pass(check_trans(std::move(o), g.r, g.d, n, loc), cp, "trans");
  Paths after_inv;
  for (auto& x : ps) {
    for (auto& s1 : share(x.heap, x.env, Term(0LL), n)) {
      for (auto& y : consume_inv(Outcome{std::move(s1.heap), x.env, x.failures}, s1.value, loc)) {
        for (auto& s2 : share(y.heap, y.env, g.r, g.d)) {
          for (auto& z : consume_inv(Outcome{std::move(s2.heap), y.env, y.failures}, s2.value, loc)) {
            after_inv.push_back(std::move(z));
          }
        }
      }
    }
  }
  after_inv = pass(std::move(after_inv), cp, "inv");
  Paths out;
  for (auto& x : after_inv) {
    for (auto& y : consume_handle(std::move(x), g.r, g.d, g.p, loc)) out.push_back(std::move(y));
  }
  out = pass(std::move(out), cp, "handle");
  for (auto& x : out) produce_handle(x, g.r, n, g.p);
  return out;
}

std::vector<Valued> CellContract::cas(Outcome o, const Term& x, const Term& n, const GhostArgs& g, SourceLoc loc,
                                      const Checkpoint& cp, Transfer* transfer) const {
  const Term sync(0LL);
  Paths ps = pass(check_trans(std::move(o), g.r, x, n, loc), cp, "trans");
  Paths held;
  for (auto& a : ps) {
    for (auto& b : consume_handle(std::move(a), g.r, x, g.p, loc)) held.push_back(std::move(b));
  }
  held = pass(std::move(held), cp, "handle");
  struct Pending {
    Outcome o;
    Term sx, sn, in;
  };
  std::vector<Pending> pending;
  Paths consumed;
  for (auto& a : held) {
    for (auto& sn : share(a.heap, a.env, sync, n)) {
      for (auto& sx : share(sn.heap, a.env, sync, x)) {
        for (auto& in : cutoff(sx.heap, sn.value, sx.value)) {
          if (transfer) transfer->consumed.insert(in.value.to_string());
          for (auto& c : consume_inv(Outcome{std::move(in.heap), a.env, a.failures}, in.value, loc)) {
            pending.push_back({std::move(c), sx.value, sn.value, in.value});
          }
        }
      }
    }
  }
  for (auto& p : pending) consumed.push_back(p.o);
  consumed = pass(std::move(consumed), cp, "inv");
  std::vector<Valued> out;
  for (size_t i = 0; i < pending.size() && i < consumed.size(); ++i) {
    const Pending& p = pending[i];
    Outcome& base = consumed[i];
    for (auto& got : cutoff(base.heap, p.sx, p.sn)) {
      Outcome ok{std::move(got.heap), base.env, base.failures};
      if (transfer) transfer->produced.insert(got.value.to_string());
      produce_handle(ok, g.r, n, g.p);
      produce_inv(ok, got.value);
      out.push_back({std::move(ok), Term(1LL)});
    }
    Outcome failed = base;
    produce_handle(failed, g.r, x, g.p);
    produce_inv(failed, p.in);
    out.push_back({std::move(failed), Term(0LL)});
  }
  return out;
}

std::vector<Outcome> CellContract::construct(Outcome o, const Term& v, SourceLoc loc, const Checkpoint& cp) const {
  if (auto m = bound(o.heap, o.env)) {
    // The state bound justifies range facts on every observed value.
    Outcome probe = o;
    probe.failures.clear();
    Term r = probe.heap.fresh("r", Sort::Role);
    Term c = probe.heap.fresh("c", Sort::Int);
    probe.heap.assume(compare(c, ">=", zero()));
    probe.heap.assume(compare(c, "<=", *m));
    Paths shares;
    for (auto& s : share(probe.heap, probe.env, r, c)) {
      Outcome x{std::move(s.heap), probe.env, {}};
      Formula in_range = f_and(compare(s.value, ">=", zero()), compare(s.value, "<=", Term(1LL)));
      if (!x.heap.proves(in_range)) {
        x.failures.push_back({loc, protocol().share + "(r, c) in [0, 1] for 0 <= c <= " + m->to_string(),
                              "share out of range: " + s.value.to_string(), {}});
      }
      shares.push_back(std::move(x));
    }
    pass(std::move(shares), cp, "share-range");

    Outcome tprobe = o;
    tprobe.failures.clear();
    Term tr = tprobe.heap.fresh("r", Sort::Role);
    Term tc = tprobe.heap.fresh("c", Sort::Int);
    Term tn = tprobe.heap.fresh("n", Sort::Int);
    tprobe.heap.assume(compare(tc, ">=", zero()));
    tprobe.heap.assume(compare(tc, "<=", *m));
    Paths moves;
    for (auto& t : trans(tprobe.heap, tprobe.env, tr, tc, tn)) {
      Outcome x{std::move(t.heap), tprobe.env, {}};
      Formula goal = f_implies(t.value, f_and(compare(tn, ">=", zero()), compare(tn, "<=", *m)));
      if (!x.heap.proves(goal)) {
        x.failures.push_back({loc, protocol().trans + " stays within [0, " + m->to_string() + "]",
                              "transition may leave the state range", {}});
      }
      moves.push_back(std::move(x));
    }
    pass(std::move(moves), cp, "trans-range");

    Formula init = f_and(compare(v, ">=", zero()), compare(v, "<=", *m));
    if (!o.heap.proves(init)) {
      o.failures.push_back({loc, "0 <= " + v.to_string() + " <= " + m->to_string(), "initial value out of range", {}});
    }
    Paths first;
    first.push_back(std::move(o));
    first = pass(std::move(first), cp, "initial-range");
    o = std::move(first.at(0));
  }
  Paths out;
  for (auto& s : share(o.heap, o.env, Term(0LL), v)) {
    for (auto& x : consume_inv(Outcome{std::move(s.heap), o.env, o.failures}, s.value, loc)) out.push_back(std::move(x));
  }
  out = pass(std::move(out), cp, "inv");
  const ClassDecl& cls = ops_.cls();
  std::vector<std::string> roles;
  for (const auto& rs : cls.role_sets) {
    if (rs.name == protocol().roles) roles = rs.roles;
  }
  for (auto& x : out) {
    for (const auto& role : roles) produce_handle(x, Term(static_cast<long long>(cls.role_index(role))), v, Term(1LL));
  }
  return out;
}

namespace {

struct ObligationKey {
  int line, col;
  std::string kind, tag;
  friend bool operator<(const ObligationKey& a, const ObligationKey& b) {
    return std::tie(a.line, a.col, a.kind, a.tag) < std::tie(b.line, b.col, b.kind, b.tag);
  }
};

void collect_assigned(const std::vector<StmtPtr>& body, std::map<std::string, Sort>& out) {
  for (const auto& s : body) {
    if ((s->kind == Stmt::Kind::Assign || s->kind == Stmt::Kind::GhostSet) && s->target &&
        s->target->kind == Expr::Kind::Var && s->target->binding == Binding::Local) {
      out.emplace(s->target->name, sort_of(s->target->type));
    }
    collect_assigned(s->body, out);
    collect_assigned(s->else_body, out);
  }
}

class MethodExec {
 public:
  MethodExec(const ClassDecl& cls, const MethodDecl& m) : cls_(cls), m_(m), ops_(cls) {
    for (const auto& f : cls.fields) {
      if (f.protocol) contracts_.emplace(f.name, CellContract(ops_, f));
    }
  }

  MethodReport run() {
    MethodReport rep;
    rep.class_name = cls_.name;
    rep.name = m_.name;
    rep.constructor = m_.constructor;
    rep.loc = m_.loc;

    Outcome o;
    o.heap.role_count = static_cast<int>(cls_.roles().size());
    for (const auto& f : cls_.fields) {
      if (f.is_final) o.env.fields[f.name] = o.heap.declare(f.name, sort_of(f.type));
    }
    for (const auto& g : cls_.ghost_params) o.env.fields[g.name] = o.heap.declare(g.name, sort_of(g.type));
    auto bind_param = [&](const Param& p) {
      Term t = o.heap.sorts.count(p.name) ? o.heap.fresh(p.name, sort_of(p.type)) : o.heap.declare(p.name, sort_of(p.type));
      o.env.vars[p.name] = t;
    };
    for (const auto& p : m_.params) bind_param(p);
    for (const auto& p : m_.ghost_params) bind_param(p);

    Paths paths{std::move(o)};
    for (const auto& c : m_.requires_) paths = guarded(paths, c.loc, "precondition", "requires", [&](Outcome x) {
      return ops_.produce(std::move(x), *c.res);
    });
    if (m_.constructor) {
      for (auto& x : paths) {
        for (const auto& f : cls_.fields) {
          if (f.protocol || f.is_final) continue;
          Chunk c;
          c.kind = Chunk::Kind::PointsTo;
          c.receiver = kThis;
          c.name = f.name;
          c.perm = Term(1LL);
          c.value = Term(0LL);
          ops_.add_chunk(x.heap, std::move(c));
        }
      }
    }
    paths = exec_block(m_.body, std::move(paths));
    for (auto& x : paths) {
      Paths one{std::move(x)};
      for (const auto& c : m_.ensures) {
        one = guarded(one, c.loc, "postcondition", "", [&](Outcome y) { return ops_.consume(std::move(y), *c.res); });
        one = record(std::move(one), c.loc, "postcondition", "", resource_to_string(*c.res));
      }
      for (const auto& y : one) {
        if (y.heap.inconsistent || !satisfiable(y.heap.facts, y.heap.sorts)) {
          warn(m_.end_loc, "inconsistent state at method exit; obligations on this path hold vacuously");
        }
      }
    }

    std::stable_sort(obs_.begin(), obs_.end(), [](const Obligation& a, const Obligation& b) {
      return std::tie(a.loc.line, a.loc.col) < std::tie(b.loc.line, b.loc.col);
    });
    rep.obligations = std::move(obs_);
    rep.warnings = std::move(warnings_);
    rep.verdict = rep.failed() ? Verdict::Fail : Verdict::Pass;
    return rep;
  }

 private:
  Obligation& obligation(SourceLoc loc, const std::string& kind, const std::string& tag, const std::string& desc) {
    ObligationKey key{loc.line, loc.col, kind, tag};
    auto it = index_.find(key);
    if (it != index_.end()) return obs_[it->second];
    index_.emplace(key, obs_.size());
    Obligation ob;
    ob.loc = loc;
    ob.kind = kind;
    ob.tag = tag;
    ob.description = desc;
    obs_.push_back(std::move(ob));
    return obs_.back();
  }

  void warn(SourceLoc loc, const std::string& msg) {
    std::string w = loc.to_string() + ": " + msg;
    if (std::find(warnings_.begin(), warnings_.end(), w) == warnings_.end()) warnings_.push_back(w);
  }

  void fail(Obligation& ob, const std::string& detail) {
    if (ob.verdict == Verdict::Pass) ob.detail = detail;
    ob.verdict = Verdict::Fail;
  }

  Paths record(Paths ps, SourceLoc loc, const std::string& kind, const std::string& tag, const std::string& desc) {
    obligation(loc, kind, tag, desc);
    for (auto& o : ps) {
      if (o.failures.empty()) continue;
      if (o.heap.inconsistent || !satisfiable(o.heap.facts, o.heap.sorts)) {
        warn(loc, "inconsistent state; " + kind + " holds vacuously");
      } else {
        const Failure& f = o.failures.front();
        std::string d = f.conjunct + ": " + f.reason;
        if (!f.candidates.empty()) {
          d += " (candidates:";
          for (const auto& c : f.candidates) d += " " + c + ";";
          d.back() = ')';
        }
        fail(obligation(loc, kind, tag, desc), d);
      }
      o.failures.clear();
    }
    return ps;
  }

  /// Runs `f` on every path, turning evaluation errors into failed obligations.
  template <class F>
  Paths guarded(const Paths& ps, SourceLoc loc, const std::string& kind, const std::string& tag, F f) {
    Paths out;
    for (const auto& o : ps) {
      try {
        for (auto& x : f(o)) out.push_back(std::move(x));
      } catch (const EvalError& e) {
        fail(obligation(loc, kind, tag, ""), e.what());
      }
    }
    return out;
  }

  CellContract::Checkpoint checkpoint(SourceLoc loc, const std::string& desc) {
    return [this, loc, desc](Paths ps, const std::string& step) {
      std::string kind = step.find("range") != std::string::npos ? "protocol" : "precondition";
      return record(std::move(ps), loc, kind, step, desc + " [" + step + "]");
    };
  }

  std::vector<Alt<std::vector<Term>>> eval_list(const std::vector<const Expr*>& es, const Outcome& o) {
    std::vector<Alt<std::vector<Term>>> out{{o.heap, {}}};
    for (const Expr* e : es) {
      std::vector<Alt<std::vector<Term>>> next;
      for (auto& prev : out) {
        for (auto& v : ops_.eval_term(*e, prev.heap, o.env)) {
          auto vals = prev.value;
          vals.push_back(std::move(v.value));
          next.push_back({std::move(v.heap), std::move(vals)});
        }
      }
      out = std::move(next);
    }
    return out;
  }

  static const Expr& with_arg(const Expr& call, const std::string& name) {
    for (const auto& w : call.with) {
      if (w.name == name) return *w.value;
    }
    throw EvalError(call.loc, "missing ghost argument '" + name + "'");
  }

  const CellContract& contract(const Expr& call) const {
    auto it = contracts_.find(call.receiver ? call.receiver->name : "");
    if (it == contracts_.end()) throw EvalError(call.loc, "unknown atomic cell");
    return it->second;
  }

  /// Evaluates a right-hand side, running any effect it denotes.
  std::vector<Valued> eval_value(Outcome o, const Expr& e, const std::string& hint) {
    std::vector<Valued> out;
    if (e.kind == Expr::Kind::Call && e.call == CallKind::CellGet) {
      const CellContract& cc = contract(e);
      std::string desc = expr_to_string(e);
      for (auto& a : eval_list({&with_arg(e, "r"), &with_arg(e, "d"), &with_arg(e, "p")}, o)) {
        GhostArgs g{a.value[0], a.value[1], a.value[2]};
        for (auto& v : cc.get(Outcome{std::move(a.heap), o.env, o.failures}, g, e.loc, hint, checkpoint(e.loc, desc))) {
          out.push_back(std::move(v));
        }
      }
      return out;
    }
    if (e.kind == Expr::Kind::Call && e.call == CallKind::CellCas) {
      const CellContract& cc = contract(e);
      std::string desc = expr_to_string(e);
      for (auto& a : eval_list({e.args[0].get(), e.args[1].get(), &with_arg(e, "r"), &with_arg(e, "p")}, o)) {
        GhostArgs g{a.value[2], Term(), a.value[3]};
        Transfer tr;
        auto vs = cc.cas(Outcome{std::move(a.heap), o.env, o.failures}, a.value[0], a.value[1], g, e.loc,
                         checkpoint(e.loc, desc), &tr);
        Obligation& ob = obligation(e.loc, "precondition", "inv", desc + " [inv]");
        if (!ob.transfer) ob.transfer = Transfer{};
        ob.transfer->consumed.insert(tr.consumed.begin(), tr.consumed.end());
        ob.transfer->produced.insert(tr.produced.begin(), tr.produced.end());
        for (auto& v : vs) out.push_back(std::move(v));
      }
      return out;
    }
    if (e.kind == Expr::Kind::Call && e.call == CallKind::Method) return call_method(std::move(o), e);
    for (auto& v : ops_.eval_term(e, o.heap, o.env)) out.push_back({Outcome{std::move(v.heap), o.env, o.failures}, v.value});
    return out;
  }

  std::vector<Valued> call_method(Outcome o, const Expr& call) {
    const MethodDecl* callee = cls_.find_method(call.name);
    if (!callee) throw EvalError(call.loc, "unknown method '" + call.name + "'");
    std::vector<const Expr*> args;
    for (const auto& a : call.args) args.push_back(a.get());
    for (const auto& g : callee->ghost_params) args.push_back(&with_arg(call, g.name));
    std::vector<Valued> out;
    std::string desc = expr_to_string(call);
    for (auto& a : eval_list(args, o)) {
      Env inner;
      inner.fields = o.env.fields;
      size_t i = 0;
      for (const auto& p : callee->params) inner.vars[p.name] = a.value[i++];
      for (const auto& p : callee->ghost_params) inner.vars[p.name] = a.value[i++];
      Paths ps{Outcome{std::move(a.heap), inner, o.failures}};
      int k = 0;
      for (const auto& c : callee->requires_) {
        std::string tag = "requires#" + std::to_string(k++);
        ps = guarded(ps, call.loc, "precondition", tag, [&](Outcome x) { return ops_.consume(std::move(x), *c.res); });
        ps = record(std::move(ps), call.loc, "precondition", tag, desc);
      }
      for (auto& x : ps) {
        Term result;
        if (callee->return_type != Type::Void) {
          result = x.heap.fresh(callee->name, sort_of(callee->return_type));
          x.env.vars["\\result"] = result;
        }
        Paths produced{std::move(x)};
        for (const auto& c : callee->ensures) {
          produced = guarded(produced, call.loc, "precondition", "ensures",
                             [&](Outcome y) { return ops_.produce(std::move(y), *c.res); });
        }
        for (auto& y : produced) {
          y.env = o.env;
          out.push_back({std::move(y), result});
        }
      }
    }
    return out;
  }

  Paths assign(Outcome o, const Expr& target, const Expr& value, SourceLoc loc) {
    Paths out;
    if (target.binding == Binding::CellField) {
      if (value.kind != Expr::Kind::New) throw EvalError(loc, "atomic cells are only assigned by construction");
      auto it = contracts_.find(target.name);
      if (it == contracts_.end()) throw EvalError(loc, "unknown atomic cell");
      std::string desc = expr_to_string(value);
      for (auto& v : ops_.eval_term(*value.args.at(0), o.heap, o.env)) {
        for (auto& x : it->second.construct(Outcome{std::move(v.heap), o.env, o.failures}, v.value, loc,
                                            checkpoint(loc, desc))) {
          out.push_back(std::move(x));
        }
      }
      return out;
    }
    std::vector<Valued> vals = eval_value(std::move(o), value, target.name);
    for (auto& v : vals) {
      Outcome x = std::move(v.o);
      switch (target.binding) {
        case Binding::FinalField: x.env.fields[target.name] = v.value; break;
        case Binding::Field:
        case Binding::GhostField: {
          auto it = std::find_if(x.heap.chunks.begin(), x.heap.chunks.end(), [&](const Chunk& c) {
            return c.kind == Chunk::Kind::PointsTo && c.receiver == kThis && c.name == target.name;
          });
          if (it == x.heap.chunks.end() || !x.heap.proves(compare(it->perm, ">=", Term(1LL)))) {
            std::vector<std::string> cands;
            if (it != x.heap.chunks.end()) cands.push_back(it->to_string());
            x.failures.push_back({loc, target.name, "write needs full permission", cands});
          }
          if (it != x.heap.chunks.end()) it->value = v.value;
          Paths one{std::move(x)};
          one = record(std::move(one), loc, "access", "write", "write " + target.name);
          for (auto& y : one) out.push_back(std::move(y));
          continue;
        }
        default: x.env.vars[target.name] = v.value; break;
      }
      out.push_back(std::move(x));
    }
    return out;
  }

  Paths exec_block(const std::vector<StmtPtr>& body, Paths ps) {
    for (const auto& s : body) {
      Paths next;
      for (auto& o : ps) {
        for (auto& x : exec_stmt(*s, std::move(o))) next.push_back(std::move(x));
      }
      ps = std::move(next);
    }
    return ps;
  }

  static std::string stmt_kind(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Fold: return "fold";
      case Stmt::Kind::Unfold: return "unfold";
      case Stmt::Kind::Assert: return "pure-assert";
      case Stmt::Kind::While: return "loop-invariant-entry";
      default: return "access";
    }
  }

  Paths exec_stmt(const Stmt& s, Outcome o) {
    try {
      return exec_stmt_unguarded(s, std::move(o));
    } catch (const EvalError& e) {
      fail(obligation(e.loc.line ? e.loc : s.loc, stmt_kind(s), "eval", ""), e.what());
      return {};
    }
  }

  Paths exec_stmt_unguarded(const Stmt& s, Outcome o) {
    using K = Stmt::Kind;
    switch (s.kind) {
      case K::LocalDecl: {
        if (!s.value) {
          o.env.vars[s.name] = o.heap.fresh(s.name, sort_of(s.decl_type));
          return {std::move(o)};
        }
        Expr target;
        target.kind = Expr::Kind::Var;
        target.name = s.name;
        target.binding = Binding::Local;
        target.type = s.decl_type;
        return assign(std::move(o), target, *s.value, s.loc);
      }
      case K::Assign:
      case K::GhostSet: return assign(std::move(o), *s.target, *s.value, s.loc);
      case K::ExprStmt: {
        const Expr& e = *s.value;
        if (e.kind == Expr::Kind::Call && e.call == CallKind::CellSet) {
          const CellContract& cc = contract(e);
          std::string desc = expr_to_string(e);
          Paths out;
          for (auto& a : eval_list({e.args[0].get(), &with_arg(e, "r"), &with_arg(e, "d"), &with_arg(e, "p")}, o)) {
            GhostArgs g{a.value[1], a.value[2], a.value[3]};
            for (auto& x : cc.set(Outcome{std::move(a.heap), o.env, o.failures}, a.value[0], g, e.loc,
                                  checkpoint(e.loc, desc))) {
              out.push_back(std::move(x));
            }
          }
          return out;
        }
        Paths out;
        for (auto& v : eval_value(std::move(o), e, "ret")) out.push_back(std::move(v.o));
        return out;
      }
      case K::If: {
        Paths out;
        for (auto& c : ops_.eval_formula(*s.cond, o.heap, o.env)) {
          for (auto& b : ops_.fork(c.heap, c.value)) {
            Paths branch{Outcome{std::move(b.heap), o.env, o.failures}};
            auto res = exec_block(b.value ? s.body : s.else_body, std::move(branch));
            for (auto& x : res) out.push_back(std::move(x));
          }
        }
        return out;
      }
      case K::While: return exec_while(s, std::move(o));
      case K::Block: return exec_block(s.body, Paths{std::move(o)});
      case K::Return: {
        if (!s.value) return {std::move(o)};
        Paths out;
        for (auto& v : eval_value(std::move(o), *s.value, "result")) {
          v.o.env.vars["\\result"] = v.value;
          out.push_back(std::move(v.o));
        }
        return out;
      }
      case K::Fold:
      case K::Unfold: {
        bool fold = s.kind == K::Fold;
        Paths ps = fold ? ops_.fold(std::move(o), *s.pred) : ops_.unfold(std::move(o), *s.pred);
        return record(std::move(ps), s.loc, fold ? "fold" : "unfold", "", resource_to_string(*s.pred));
      }
      case K::Assert: {
        Paths out;
        for (auto& f : ops_.eval_formula(*s.value, o.heap, o.env)) {
          Outcome x{std::move(f.heap), o.env, o.failures};
          if (!x.heap.proves(f.value)) {
            x.failures.push_back({s.loc, expr_to_string(*s.value), "cannot prove " + f.value.to_string(), {}});
          }
          out.push_back(std::move(x));
        }
        return record(std::move(out), s.loc, "pure-assert", "", expr_to_string(*s.value));
      }
    }
    return {std::move(o)};
  }

  Outcome havoc(Outcome o, const std::map<std::string, Sort>& modified) {
    for (const auto& [name, sort] : modified) {
      if (o.env.vars.count(name)) o.env.vars[name] = o.heap.fresh(name, sort);
    }
    return o;
  }

  Paths assume_invariants(Paths ps, const Stmt& s) {
    for (size_t i = 0; i < s.invariants.size(); ++i) {
      const Resource& inv = *s.invariants[i];
      ps = guarded(ps, s.invariant_exprs[i]->loc, "loop-invariant-entry", "",
                   [&](Outcome x) { return ops_.produce(std::move(x), inv); });
    }
    return ps;
  }

  Paths assert_invariants(Paths ps, const Stmt& s, const std::string& kind) {
    for (size_t i = 0; i < s.invariants.size(); ++i) {
      const Resource& inv = *s.invariants[i];
      SourceLoc loc = s.invariant_exprs[i]->loc;
      ps = guarded(ps, loc, kind, "", [&](Outcome x) { return ops_.consume(std::move(x), inv); });
      ps = record(std::move(ps), loc, kind, "", resource_to_string(inv));
    }
    return ps;
  }

  Paths with_guard(Paths ps, const Stmt& s, bool holds) {
    Paths out;
    for (auto& o : ps) {
      for (auto& c : ops_.eval_formula(*s.cond, o.heap, o.env)) {
        for (auto& b : ops_.fork(c.heap, c.value)) {
          if (b.value == holds) out.push_back(Outcome{std::move(b.heap), o.env, o.failures});
        }
      }
    }
    return out;
  }

  Paths exec_while(const Stmt& s, Outcome o) {
    std::map<std::string, Sort> modified;
    collect_assigned(s.body, modified);
    Paths frames = assert_invariants(Paths{std::move(o)}, s, "loop-invariant-entry");
    Paths out;
    for (auto& frame : frames) {
      // One arbitrary iteration from the invariant alone.
      Outcome start = havoc(frame, modified);
      start.heap.chunks.clear();
      Paths body = with_guard(assume_invariants(Paths{std::move(start)}, s), s, true);
      body = exec_block(s.body, std::move(body));
      assert_invariants(std::move(body), s, "loop-invariant-preservation");
      // Exit: frame, invariant and the negated guard.
      Outcome exit = havoc(std::move(frame), modified);
      for (auto& x : with_guard(assume_invariants(Paths{std::move(exit)}, s), s, false)) out.push_back(std::move(x));
    }
    return out;
  }

  const ClassDecl& cls_;
  const MethodDecl& m_;
  HeapOps ops_;
  std::map<std::string, CellContract> contracts_;
  std::map<ObligationKey, size_t> index_;
  std::vector<Obligation> obs_;
  std::vector<std::string> warnings_;
};

}  // namespace

MethodReport exec_method(const Program& p, const ClassDecl& cls, const MethodDecl& m) {
  (void)p;
  return MethodExec(cls, m).run();
}

Report verify_program(const Program& p) {
  auto start = std::chrono::steady_clock::now();
  Report r;
  for (const auto& cls : p.classes) {
    for (const auto& m : cls.methods) r.methods.push_back(exec_method(p, cls, m));
  }
  r.verdict = r.failed() ? Verdict::Fail : Verdict::Pass;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace svl
