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

#include <algorithm>
#include <map>
#include <set>

#include "frontend_internal.hpp"
#include "svl/frontend.hpp"

namespace svl {
namespace detail {

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& subst) {
  if (!e) return e;
  if (e->kind == Expr::Kind::Var) {
    auto it = subst.find(e->name);
    if (it != subst.end()) return it->second;
    return e;
  }
  auto copy = std::make_shared<Expr>(*e);
  for (auto& a : copy->args) a = substitute(a, subst);
  if (copy->receiver) copy->receiver = substitute(copy->receiver, subst);
  for (auto& w : copy->with) w.value = substitute(w.value, subst);
  if (copy->kind == Expr::Kind::ForallStar && subst.count(copy->name)) {
    auto inner = subst;
    inner.erase(copy->name);
    copy->args = {substitute(e->args[0], inner), substitute(e->args[1], inner)};
  }
  return copy;
}

namespace {

struct Symbol {
  Binding binding;
  Type type;
};

bool is_numeric(Type t) { return t == Type::Int || t == Type::Frac; }

Type join_numeric(Type a, Type b) {
  if (a == Type::Frac || b == Type::Frac) return Type::Frac;
  if (a == Type::Int && b == Type::Int) return Type::Int;
  return Type::Unknown;
}

struct ExprContext {
  bool allow_existential_decl = false;
};

class Resolver {
 public:
  Resolver(Program& prog) : prog_(prog) {}

  void run() {
    std::set<std::string> class_names;
    for (auto& cls : prog_.classes) {
      if (!class_names.insert(cls.name).second) throw ResolveError(cls.loc, "duplicate class '" + cls.name + "'");
      resolve_class(cls);
    }
    for (auto& h : prog_.harnesses) resolve_harness(h);
  }

 private:
  Program& prog_;
  ClassDecl* cls_ = nullptr;
  const MethodDecl* method_ = nullptr;
  std::vector<std::map<std::string, Symbol>> scopes_;

  [[noreturn]] static void unresolved(SourceLoc loc, const std::string& what) {
    throw ResolveError(loc, "undeclared identifier '" + what + "'");
  }

  void declare(const std::string& name, Symbol sym, SourceLoc loc) {
    auto& top = scopes_.back();
    if (top.count(name)) throw ResolveError(loc, "duplicate declaration of '" + name + "'");
    top[name] = sym;
  }

  const Symbol* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  const FieldDecl* cell_of(const ExprPtr& recv) const {
    if (!recv) return nullptr;
    if ((recv->kind == Expr::Kind::Var || recv->kind == Expr::Kind::FieldAccess) &&
        recv->binding == Binding::CellField) {
      return cls_->find_field(recv->name);
    }
    return nullptr;
  }

  void resolve_class(ClassDecl& cls) {
    cls_ = &cls;
    scopes_.clear();
    scopes_.emplace_back();
    std::set<std::string> members;
    auto member = [&](const std::string& n, SourceLoc loc) {
      if (!members.insert(n).second) throw ResolveError(loc, "duplicate declaration of '" + n + "'");
    };
    declare(kSyncRole, {Binding::Role, Type::Role}, cls.loc);
    members.insert(kSyncRole);
    for (const auto& rs : cls.role_sets) {
      member(rs.name, rs.loc);
      for (const auto& r : rs.roles) {
        if (r == kSyncRole) throw ResolveError(rs.loc, "role S is reserved for the synchroniser");
        if (!lookup(r)) declare(r, {Binding::Role, Type::Role}, rs.loc);
        members.insert(r);
      }
    }
    for (const auto& p : cls.ghost_params) {
      member(p.name, p.loc);
      declare(p.name, {Binding::GhostField, p.type}, p.loc);
    }
    for (const auto& f : cls.fields) {
      member(f.name, f.loc);
      Binding b = f.type == Type::Cell ? Binding::CellField
                  : f.ghost            ? Binding::GhostField
                  : f.is_final         ? Binding::FinalField
                                       : Binding::Field;
      declare(f.name, {b, f.type}, f.loc);
    }
    for (const auto& p : cls.predicates) member(p.name, p.loc);
    for (const auto& f : cls.functions) member(f.name, f.loc);
    for (const auto& m : cls.methods) {
      if (m.constructor && m.name != cls.name) throw ResolveError(m.loc, "constructor name mismatch");
      member(m.name, m.loc);
    }
    if (members.count(kHandle)) throw ResolveError(cls.loc, "'handle' is reserved");

    for (const auto& f : cls.fields) {
      if (!f.protocol) continue;
      const auto& pr = *f.protocol;
      auto has_roles = std::any_of(cls.role_sets.begin(), cls.role_sets.end(),
                                   [&](const RoleSetDecl& rs) { return rs.name == pr.roles; });
      if (!has_roles) unresolved(f.loc, pr.roles);
      if (!cls.find_predicate(pr.inv)) unresolved(f.loc, pr.inv);
      if (!cls.find_function(pr.share)) unresolved(f.loc, pr.share);
      if (!cls.find_function(pr.trans)) unresolved(f.loc, pr.trans);
      if (!pr.max.empty()) {
        const Symbol* s = lookup(pr.max);
        if (!s || (s->binding != Binding::GhostField && s->binding != Binding::FinalField)) {
          unresolved(f.loc, pr.max);
        }
      }
    }

    for (auto& fd : cls.functions) resolve_function(fd);
    for (auto& pd : cls.predicates) {
      if (!pd.body_expr) continue;
      scopes_.emplace_back();
      for (const auto& p : pd.params) declare(p.name, {Binding::PredParam, p.type}, p.loc);
      resolve_expr(pd.body_expr, {});
      pd.body = to_resource(pd.body_expr);
      scopes_.pop_back();
    }
    for (auto& m : cls.methods) resolve_method(m);
    cls_ = nullptr;
  }

  void resolve_function(FunctionDecl& fd) {
    scopes_.emplace_back();
    for (const auto& p : fd.params) declare(p.name, {Binding::FuncParam, p.type}, p.loc);
    std::map<std::string, ExprPtr> locals;
    bool pure_form = true;
    for (auto& s : fd.body) {
      resolve_stmt(s);
      if (s->kind == Stmt::Kind::LocalDecl && s->value && !fd.expr) {
        locals[s->name] = substitute(s->value, locals);
      } else if (s->kind == Stmt::Kind::Return && s->value && !fd.expr) {
        fd.expr = substitute(s->value, locals);
      } else {
        pure_form = false;
      }
    }
    if (!pure_form) fd.expr = nullptr;
    scopes_.pop_back();
  }

  void resolve_method(MethodDecl& m) {
    method_ = &m;
    scopes_.emplace_back();
    for (const auto& p : m.params) declare(p.name, {Binding::Param, p.type}, p.loc);
    for (const auto& p : m.ghost_params) declare(p.name, {Binding::GhostParam, p.type}, p.loc);
    for (auto& c : m.requires_) {
      resolve_expr(c.expr, {});
      c.res = to_resource(c.expr);
    }
    scopes_.emplace_back();
    for (auto& c : m.ensures) {
      resolve_expr(c.expr, {.allow_existential_decl = true});
      c.res = to_resource(c.expr);
    }
    scopes_.pop_back();
    scopes_.emplace_back();
    for (auto& s : m.body) resolve_stmt(s);
    scopes_.pop_back();
    scopes_.pop_back();
    method_ = nullptr;
  }

  void resolve_block(std::vector<StmtPtr>& body) {
    scopes_.emplace_back();
    for (auto& s : body) resolve_stmt(s);
    scopes_.pop_back();
  }

  void require_bool_guard(const ExprPtr& e) {
    if (e->type != Type::Bool) throw ParseError(e->loc, "non-boolean guard");
  }

  void resolve_stmt(StmtPtr& s) {
    switch (s->kind) {
      case Stmt::Kind::LocalDecl:
        if (s->value) resolve_expr(s->value, {});
        declare(s->name, {Binding::Local, s->decl_type}, s->loc);
        break;
      case Stmt::Kind::Assign:
      case Stmt::Kind::GhostSet:
        resolve_expr(s->target, {});
        resolve_expr(s->value, {});
        if (s->target->kind != Expr::Kind::Var && s->target->kind != Expr::Kind::FieldAccess) {
          throw ParseError(s->target->loc, "invalid assignment target");
        }
        break;
      case Stmt::Kind::ExprStmt:
      case Stmt::Kind::Assert:
        resolve_expr(s->value, {});
        break;
      case Stmt::Kind::Return:
        if (s->value) resolve_expr(s->value, {});
        break;
      case Stmt::Kind::If:
        resolve_expr(s->cond, {});
        require_bool_guard(s->cond);
        resolve_block(s->body);
        resolve_block(s->else_body);
        break;
      case Stmt::Kind::While:
        resolve_expr(s->cond, {});
        require_bool_guard(s->cond);
        s->invariants.clear();
        for (auto& inv : s->invariant_exprs) {
          resolve_expr(inv, {});
          s->invariants.push_back(to_resource(inv));
        }
        resolve_block(s->body);
        break;
      case Stmt::Kind::Block:
        resolve_block(s->body);
        break;
      case Stmt::Kind::Fold:
      case Stmt::Kind::Unfold: {
        resolve_expr(s->value, {});
        if (s->value->kind != Expr::Kind::Call ||
            (s->value->call != CallKind::Predicate && s->value->call != CallKind::Handle)) {
          throw ParseError(s->value->loc, "fold/unfold expects a predicate instance");
        }
        s->pred = to_resource(s->value);
        break;
      }
    }
  }

  void resolve_expr(const ExprPtr& e, const ExprContext& ctx) {
    if (!e) return;
    using K = Expr::Kind;
    switch (e->kind) {
      case K::IntLit:
        e->type = Type::Int;
        return;
      case K::BoolLit:
        e->type = Type::Bool;
        return;
      case K::This:
        e->binding = Binding::This;
        return;
      case K::Wildcard:
        return;
      case K::Result:
        if (!method_) throw ResolveError(e->loc, "\\result outside a method contract");
        e->binding = Binding::Result;
        e->type = method_->return_type;
        return;
      case K::Existential: {
        if (!ctx.allow_existential_decl) {
          throw ResolveError(e->loc, "existential ?" + e->name + " is only allowed in postconditions");
        }
        e->binding = Binding::Existential;
        e->type = Type::Int;
        if (const Symbol* s = lookup(e->name); s && s->binding == Binding::Existential) return;
        declare(e->name, {Binding::Existential, Type::Int}, e->loc);
        return;
      }
      case K::Var: {
        const Symbol* s = lookup(e->name);
        if (!s) unresolved(e->loc, e->name);
        e->binding = s->binding;
        e->type = s->type;
        return;
      }
      case K::FieldAccess: {
        resolve_expr(e->receiver, ctx);
        if (e->receiver->kind != K::This) {
          throw ParseError(e->loc, "only fields of 'this' can be accessed");
        }
        const FieldDecl* f = cls_ ? cls_->find_field(e->name) : nullptr;
        if (!f) unresolved(e->loc, e->name);
        e->binding = f->type == Type::Cell ? Binding::CellField
                     : f->ghost            ? Binding::GhostField
                     : f->is_final         ? Binding::FinalField
                                           : Binding::Field;
        e->type = f->type;
        return;
      }
      case K::Unary:
        resolve_expr(e->args[0], ctx);
        e->type = e->op == "!" ? Type::Bool : e->args[0]->type;
        return;
      case K::Binary: {
        resolve_expr(e->args[0], ctx);
        resolve_expr(e->args[1], ctx);
        Type a = e->args[0]->type, b = e->args[1]->type;
        const std::string& op = e->op;
        if (op == "**") {
          e->type = Type::Resource;
        } else if (op == "==>") {
          e->type = b == Type::Resource ? Type::Resource : Type::Bool;
        } else if (op == "&&" || op == "||" || op == "==" || op == "!=" || op == "<" || op == "<=" ||
                   op == ">" || op == ">=") {
          e->type = Type::Bool;
        } else if (op == "/") {
          e->type = Type::Frac;
        } else if (op == "%") {
          e->type = Type::Int;
        } else {
          e->type = join_numeric(a, b);
        }
        return;
      }
      case K::Ternary:
        for (auto& a : e->args) resolve_expr(a, ctx);
        if (is_numeric(e->args[1]->type) && is_numeric(e->args[2]->type)) {
          e->type = join_numeric(e->args[1]->type, e->args[2]->type);
        } else {
          e->type = e->args[1]->type;
        }
        return;
      case K::ForallStar:
        scopes_.emplace_back();
        declare(e->name, {Binding::Binder, e->binder_type}, e->loc);
        resolve_expr(e->args[0], ctx);
        resolve_expr(e->args[1], ctx);
        scopes_.pop_back();
        e->type = Type::Resource;
        return;
      case K::New:
        if (e->name != "AtomicInteger") throw ResolveError(e->loc, "only AtomicInteger can be allocated");
        for (auto& a : e->args) resolve_expr(a, ctx);
        for (auto& w : e->with) resolve_expr(w.value, ctx);
        e->type = Type::Cell;
        return;
      case K::Call:
        resolve_call(e, ctx);
        return;
    }
  }

  void resolve_call(const ExprPtr& e, const ExprContext& ctx) {
    for (auto& a : e->args) resolve_expr(a, ctx);
    for (auto& w : e->with) resolve_expr(w.value, ctx);
    if (!cls_) unresolved(e->loc, e->name);
    if (e->receiver) {
      resolve_expr(e->receiver, ctx);
      if (const FieldDecl* cell = cell_of(e->receiver)) {
        const ProtocolRef& pr = *cell->protocol;
        auto arity = [&](size_t n) {
          if (e->args.size() != n) throw ParseError(e->loc, "arity mismatch in call to " + e->name);
        };
        if (e->name == "get") {
          arity(0);
          e->call = CallKind::CellGet;
          e->type = Type::Int;
        } else if (e->name == "set") {
          arity(1);
          e->call = CallKind::CellSet;
          e->type = Type::Void;
        } else if (e->name == "compareAndSet") {
          arity(2);
          e->call = CallKind::CellCas;
          e->type = Type::Bool;
        } else if (e->name == kHandle) {
          e->call = CallKind::Handle;
          e->type = Type::Resource;
        } else if (e->name == "inv") {
          e->receiver = nullptr;
          e->name = pr.inv;
          e->call = CallKind::Predicate;
          e->type = Type::Resource;
        } else if (e->name == "share" || e->name == "trans") {
          e->receiver = nullptr;
          e->name = e->name == "share" ? pr.share : pr.trans;
          resolve_call(e, ctx);
        } else {
          throw ResolveError(e->loc, "AtomicInteger has no member '" + e->name + "'");
        }
        return;
      }
      if (e->receiver->kind != Expr::Kind::This) throw ParseError(e->loc, "invalid call receiver");
    }
    if (e->name == "PointsTo" || e->name == "Perm") {
      e->call = e->name == "PointsTo" ? CallKind::PointsTo : CallKind::Perm;
      e->type = Type::Resource;
      return;
    }
    if (cls_->find_predicate(e->name)) {
      e->call = CallKind::Predicate;
      e->type = Type::Resource;
      return;
    }
    if (const FunctionDecl* f = cls_->find_function(e->name)) {
      if (f->params.size() != e->args.size()) {
        throw ParseError(e->loc, "arity mismatch in call to " + e->name);
      }
      e->call = CallKind::Function;
      e->type = f->return_type;
      return;
    }
    if (const MethodDecl* m = cls_->find_method(e->name); m && !m->constructor) {
      if (m->params.size() != e->args.size()) {
        throw ParseError(e->loc, "arity mismatch in call to " + e->name);
      }
      e->call = CallKind::Method;
      e->type = m->return_type;
      return;
    }
    unresolved(e->loc, e->name);
  }

  ResourcePtr to_resource(const ExprPtr& e) {
    auto r = std::make_shared<Resource>();
    r->loc = e->loc;
    if (e->kind == Expr::Kind::Binary && e->op == "**") {
      r->kind = Resource::Kind::Star;
      r->left = to_resource(e->args[0]);
      r->right = to_resource(e->args[1]);
      return r;
    }
    if (e->kind == Expr::Kind::Binary && e->op == "==>" && e->type == Type::Resource) {
      r->kind = Resource::Kind::Implies;
      r->cond = e->args[0];
      r->right = to_resource(e->args[1]);
      return r;
    }
    if (e->kind == Expr::Kind::ForallStar) {
      r->kind = Resource::Kind::IterStar;
      r->binder = e->name;
      r->cond = e->args[0];
      r->right = to_resource(e->args[1]);
      return r;
    }
    if (e->kind == Expr::Kind::Ternary && e->type == Type::Resource) {
      throw ParseError(e->loc, "conditional resources must be written with ==>");
    }
    if (e->kind == Expr::Kind::Call && (e->call == CallKind::PointsTo || e->call == CallKind::Perm)) {
      size_t want = e->call == CallKind::PointsTo ? 3 : 2;
      if (e->args.size() != want) throw ParseError(e->loc, "arity mismatch in " + e->name);
      const ExprPtr& loc = e->args[0];
      if (loc->binding != Binding::Field) throw ParseError(loc->loc, "permission target must be a heap field");
      r->kind = Resource::Kind::PointsTo;
      r->name = loc->name;
      r->perm = e->args[1];
      if (e->call == CallKind::PointsTo) {
        r->value = e->args[2];
      } else {
        auto w = std::make_shared<Expr>();
        w->kind = Expr::Kind::Wildcard;
        w->loc = e->loc;
        r->value = w;
      }
      return r;
    }
    if (e->kind == Expr::Kind::Call && (e->call == CallKind::Predicate || e->call == CallKind::Handle)) {
      r->kind = Resource::Kind::Pred;
      r->name = e->name;
      r->receiver = e->receiver;
      r->args = e->args;
      return r;
    }
    r->kind = Resource::Kind::Pure;
    r->cond = e;
    return r;
  }

  void resolve_harness(Harness& h) {
    ClassDecl* cls = nullptr;
    for (auto& c : prog_.classes)
      if (c.name == h.class_name) cls = &c;
    if (!cls) unresolved(h.loc, h.class_name);
    cls_ = nullptr;
    scopes_.clear();
    scopes_.emplace_back();
    for (auto& a : h.ctor_args) resolve_expr(a, {});
    for (auto& w : h.ctor_with) resolve_expr(w.value, {});
    const MethodDecl* ctor = cls->constructor();
    size_t nparams = ctor ? ctor->params.size() : 0;
    if (h.ctor_args.size() != nparams) throw ParseError(h.loc, "arity mismatch in harness constructor call");
    auto roles = cls->roles();
    for (auto& th : h.threads) {
      if (std::find(roles.begin(), roles.end(), th.role) == roles.end()) unresolved(th.loc, th.role);
      for (auto& [cell, frac] : th.holdings) {
        const FieldDecl* f = cls->find_field(cell);
        if (!f || f->type != Type::Cell) unresolved(th.loc, cell);
        resolve_expr(frac, {});
      }
      for (auto& a : th.actions) {
        if (a.kind == HarnessAction::Kind::Call) {
          const MethodDecl* m = cls->find_method(a.name);
          if (!m || m->constructor) unresolved(a.loc, a.name);
          if (m->params.size() != a.args.size()) throw ParseError(a.loc, "arity mismatch in call to " + a.name);
          for (auto& x : a.args) resolve_expr(x, {});
        } else {
          const FieldDecl* f = cls->find_field(a.name);
          if (!f || f->type != Type::Cell) unresolved(a.loc, a.name);
        }
      }
    }
  }
};

}  // namespace

void resolve(Program& program) { Resolver(program).run(); }

}  // namespace detail

Program parse(std::string_view source) {
  Program p = detail::parse_syntax(source);
  detail::resolve(p);
  return p;
}

}  // namespace svl
