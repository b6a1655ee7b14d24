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

#include <functional>
#include <map>
#include <set>

#include "svl/frontend.hpp"

namespace svl {

namespace {

bool numeric(Type t) { return t == Type::Int || t == Type::Frac; }

bool assignable(Type to, Type from) {
  if (to == from) return true;
  return to == Type::Frac && from == Type::Int;
}

bool is_ghost_binding(Binding b) { return b == Binding::GhostField || b == Binding::GhostParam; }

class Checker {
 public:
  explicit Checker(const Program& p) : prog_(p) {}

  std::vector<Diagnostic> run() {
    for (const auto& cls : prog_.classes) check_class(cls);
    for (const auto& h : prog_.harnesses) check_harness(h);
    return std::move(diags_);
  }

 private:
  const Program& prog_;
  const ClassDecl* cls_ = nullptr;
  const MethodDecl* method_ = nullptr;
  std::vector<Diagnostic> diags_;
  std::vector<std::set<std::string>> ghost_locals_;
  int loop_depth_ = 0;

  void diag(SourceLoc loc, std::string msg) { diags_.push_back({loc, std::move(msg)}); }

  bool is_ghost_local(const std::string& n) const {
    for (auto it = ghost_locals_.rbegin(); it != ghost_locals_.rend(); ++it)
      if (it->count(n)) return true;
    return false;
  }

  bool is_ghost_var(const Expr& e) const {
    if (e.kind != Expr::Kind::Var && e.kind != Expr::Kind::FieldAccess) return false;
    if (is_ghost_binding(e.binding)) return true;
    return e.binding == Binding::Local && is_ghost_local(e.name);
  }

  // ---- expressions ----

  void check_pure(const ExprPtr& e) {
    check_expr(e);
    if (e->type != Type::Bool) diag(e->loc, "expected boolean expression, found " + type_name(e->type));
  }

  void check_expr(const ExprPtr& e) {
    if (!e) return;
    using K = Expr::Kind;
    switch (e->kind) {
      case K::Unary:
        check_expr(e->args[0]);
        if (e->op == "!" && e->args[0]->type != Type::Bool) diag(e->loc, "operand of '!' must be boolean");
        if (e->op == "-" && !numeric(e->args[0]->type)) diag(e->loc, "operand of '-' must be numeric");
        return;
      case K::Binary: {
        check_expr(e->args[0]);
        check_expr(e->args[1]);
        Type a = e->args[0]->type, b = e->args[1]->type;
        const std::string& op = e->op;
        if (op == "**" || (op == "==>" && e->type == Type::Resource)) return;  // via check_res
        if (op == "&&" || op == "||" || op == "==>") {
          if (a != Type::Bool || b != Type::Bool) diag(e->loc, "operands of '" + op + "' must be boolean");
        } else if (op == "==" || op == "!=") {
          bool ok = (numeric(a) && numeric(b)) || (a == b && a != Type::Unknown && a != Type::Resource);
          if (!ok) diag(e->loc, "cannot compare " + type_name(a) + " with " + type_name(b));
        } else if (!numeric(a) || !numeric(b)) {
          diag(e->loc, "operands of '" + op + "' must be numeric");
        }
        return;
      }
      case K::Ternary:
        check_expr(e->args[0]);
        check_expr(e->args[1]);
        check_expr(e->args[2]);
        if (e->args[0]->type != Type::Bool) diag(e->loc, "condition must be boolean");
        if (!(numeric(e->args[1]->type) && numeric(e->args[2]->type)) && e->args[1]->type != e->args[2]->type) {
          diag(e->loc, "branches of conditional have different types");
        }
        return;
      case K::Call:
        check_call(e);
        return;
      case K::New:
        for (const auto& a : e->args) check_expr(a);
        return;
      case K::ForallStar:
        check_pure(e->args[0]);
        return;
      default:
        return;
    }
  }

  void check_args_against(const ExprPtr& e, const std::vector<Param>& params, const std::string& what) {
    if (e->args.size() != params.size()) {
      diag(e->loc, what + " '" + e->name + "' expects " + std::to_string(params.size()) + " arguments, got " +
                       std::to_string(e->args.size()));
      return;
    }
    for (size_t i = 0; i < params.size(); ++i) {
      const ExprPtr& a = e->args[i];
      if (a->kind == Expr::Kind::Existential || a->kind == Expr::Kind::Wildcard) continue;
      if (!assignable(params[i].type, a->type)) {
        diag(a->loc, "argument " + std::to_string(i + 1) + " of '" + e->name + "' must be " +
                         type_name(params[i].type) + ", found " + type_name(a->type));
      }
    }
  }

  static const std::vector<Param>& handle_params() {
    static const std::vector<Param> ps = {{Type::Role, "r", {}}, {Type::Int, "d", {}}, {Type::Frac, "p", {}}};
    return ps;
  }

  void check_call(const ExprPtr& e) {
    for (const auto& a : e->args) check_expr(a);
    for (const auto& w : e->with) check_expr(w.value);
    switch (e->call) {
      case CallKind::Function:
        if (const FunctionDecl* f = cls_->find_function(e->name)) check_args_against(e, f->params, "function");
        break;
      case CallKind::Predicate:
        if (const PredicateDecl* p = cls_->find_predicate(e->name)) check_args_against(e, p->params, "predicate");
        break;
      case CallKind::Handle:
        check_args_against(e, handle_params(), "predicate");
        break;
      case CallKind::Method:
        if (const MethodDecl* m = cls_->find_method(e->name)) {
          check_args_against(e, m->params, "method");
          check_with(e, m->ghost_params);
        }
        break;
      case CallKind::CellGet:
        check_with(e, {{Type::Role, "r", {}}, {Type::Int, "d", {}}, {Type::Frac, "p", {}}});
        break;
      case CallKind::CellSet:
        if (!numeric(e->args[0]->type)) diag(e->args[0]->loc, "set expects an int argument");
        check_with(e, {{Type::Role, "r", {}}, {Type::Int, "d", {}}, {Type::Frac, "p", {}}});
        break;
      case CallKind::CellCas:
        for (const auto& a : e->args)
          if (a->type != Type::Int) diag(a->loc, "compareAndSet expects int arguments");
        check_with(e, {{Type::Role, "r", {}}, {Type::Frac, "p", {}}});
        break;
      default:
        break;
    }
  }

  void check_with(const ExprPtr& e, const std::vector<Param>& ghosts) {
    std::set<std::string> seen;
    for (const auto& w : e->with) {
      auto it = std::find_if(ghosts.begin(), ghosts.end(), [&](const Param& p) { return p.name == w.name; });
      if (it == ghosts.end()) {
        diag(w.value->loc, "'" + e->name + "' has no ghost parameter '" + w.name + "'");
        continue;
      }
      if (!seen.insert(w.name).second) diag(w.value->loc, "ghost argument '" + w.name + "' given twice");
      if (!assignable(it->type, w.value->type)) {
        diag(w.value->loc, "ghost argument '" + w.name + "' must be " + type_name(it->type));
      }
    }
    for (const auto& g : ghosts) {
      if (!seen.count(g.name)) diag(e->loc, "missing ghost argument '" + g.name + "' for '" + e->name + "'");
    }
  }

  void check_res(const ResourcePtr& r) {
    if (!r) return;
    switch (r->kind) {
      case Resource::Kind::Emp:
        return;
      case Resource::Kind::Pure:
        check_pure(r->cond);
        return;
      case Resource::Kind::Star:
        check_res(r->left);
        check_res(r->right);
        return;
      case Resource::Kind::Implies:
      case Resource::Kind::IterStar:
        check_pure(r->cond);
        check_res(r->right);
        return;
      case Resource::Kind::PointsTo:
        check_expr(r->perm);
        if (!numeric(r->perm->type)) diag(r->perm->loc, "permission must be a fraction");
        if (r->value->kind != Expr::Kind::Wildcard && r->value->kind != Expr::Kind::Existential) {
          check_expr(r->value);
        }
        return;
      case Resource::Kind::Pred: {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Call;
        e->name = r->name;
        e->loc = r->loc;
        e->args = r->args;
        e->call = r->receiver ? CallKind::Handle : CallKind::Predicate;
        check_call(e);
        return;
      }
    }
  }

  // ---- declarations ----

  void check_class(const ClassDecl& cls) {
    cls_ = &cls;
    for (const auto& p : cls.predicates) check_predicate(p);
    for (const auto& f : cls.functions) check_function(f);
    check_recursion(cls);
    for (const auto& f : cls.fields)
      if (f.protocol) check_protocol(f);
    for (const auto& m : cls.methods) check_method(m);
    cls_ = nullptr;
  }

  void check_predicate(const PredicateDecl& p) {
    if (p.group && (p.params.empty() || p.params.back().type != Type::Frac)) {
      diag(p.loc, "group predicate '" + p.name + "' needs a trailing frac parameter");
    }
    if (!p.body) return;
    check_res(p.body);
    if (p.group && !p.params.empty() && p.params.back().type == Type::Frac) {
      check_scale_linear(p.body, p.params.back().name, p.name);
    }
  }

  static bool mentions(const ExprPtr& e, const std::string& name) {
    if (!e) return false;
    if (e->kind == Expr::Kind::Var && e->name == name) return true;
    for (const auto& a : e->args)
      if (mentions(a, name)) return true;
    return mentions(e->receiver, name);
  }

  // The scale parameter may only appear in permission positions, so that
  // folding at scale a+b equals folding at a and at b.
  void check_scale_linear(const ResourcePtr& r, const std::string& scale, const std::string& pred) {
    auto bad = [&](SourceLoc loc) {
      diag(loc, "scale parameter '" + scale + "' of group predicate '" + pred + "' may only be used as a permission");
    };
    switch (r->kind) {
      case Resource::Kind::Emp:
        return;
      case Resource::Kind::Pure:
        if (mentions(r->cond, scale)) bad(r->loc);
        return;
      case Resource::Kind::Star:
        check_scale_linear(r->left, scale, pred);
        check_scale_linear(r->right, scale, pred);
        return;
      case Resource::Kind::Implies:
      case Resource::Kind::IterStar:
        if (mentions(r->cond, scale)) bad(r->loc);
        check_scale_linear(r->right, scale, pred);
        return;
      case Resource::Kind::PointsTo:
        if (mentions(r->value, scale)) bad(r->loc);
        return;
      case Resource::Kind::Pred: {
        bool group = r->receiver != nullptr;
        if (!group) {
          const PredicateDecl* pd = cls_->find_predicate(r->name);
          group = pd && pd->group;
        }
        for (size_t i = 0; i < r->args.size(); ++i) {
          bool scale_pos = group && i + 1 == r->args.size();
          if (!scale_pos && mentions(r->args[i], scale)) bad(r->loc);
        }
        return;
      }
    }
  }

  void check_function(const FunctionDecl& f) {
    if (!f.expr) {
      diag(f.loc, f.name + " must be pure");
      return;
    }
    std::function<bool(const ExprPtr&)> impure = [&](const ExprPtr& e) -> bool {
      if (!e) return false;
      if (e->kind == Expr::Kind::Call && e->call != CallKind::Function) return true;
      if (e->kind == Expr::Kind::New) return true;
      if ((e->kind == Expr::Kind::Var || e->kind == Expr::Kind::FieldAccess) && e->binding == Binding::Field) {
        return true;
      }
      for (const auto& a : e->args)
        if (impure(a)) return true;
      return false;
    };
    if (impure(f.expr)) {
      diag(f.loc, f.name + " must be pure");
      return;
    }
    check_expr(f.expr);
    if (!assignable(f.return_type, f.expr->type)) {
      diag(f.loc, "function '" + f.name + "' returns " + type_name(f.expr->type) + ", declared " +
                      type_name(f.return_type));
    }
  }

  void check_recursion(const ClassDecl& cls) {
    std::map<std::string, std::set<std::string>> calls;
    std::function<void(const ExprPtr&, std::set<std::string>&)> collect = [&](const ExprPtr& e,
                                                                              std::set<std::string>& out) {
      if (!e) return;
      if (e->kind == Expr::Kind::Call && e->call == CallKind::Function) out.insert(e->name);
      for (const auto& a : e->args) collect(a, out);
    };
    for (const auto& f : cls.functions)
      if (f.expr) collect(f.expr, calls[f.name]);
    for (const auto& f : cls.functions) {
      std::set<std::string> seen;
      std::vector<std::string> stack(calls[f.name].begin(), calls[f.name].end());
      while (!stack.empty()) {
        std::string g = stack.back();
        stack.pop_back();
        if (g == f.name) {
          diag(f.loc, "function '" + f.name + "' is recursive");
          break;
        }
        if (seen.insert(g).second) stack.insert(stack.end(), calls[g].begin(), calls[g].end());
      }
    }
  }

  void check_protocol(const FieldDecl& f) {
    const ProtocolRef& pr = *f.protocol;
    if (const PredicateDecl* inv = cls_->find_predicate(pr.inv)) {
      if (!inv->group || inv->params.size() != 1 || inv->params[0].type != Type::Frac) {
        diag(f.loc, "protocol invariant '" + pr.inv + "' must be a group predicate (frac -> resource)");
      }
    }
    auto sig = [&](const std::string& name, std::vector<Type> params, Type ret) {
      const FunctionDecl* fn = cls_->find_function(name);
      if (!fn) return;
      bool ok = fn->return_type == ret && fn->params.size() == params.size();
      for (size_t i = 0; ok && i < params.size(); ++i) ok = fn->params[i].type == params[i];
      if (!ok) diag(fn->loc, "protocol function '" + name + "' has the wrong signature");
    };
    sig(pr.share, {Type::Role, Type::Int}, Type::Frac);
    sig(pr.trans, {Type::Role, Type::Int, Type::Int}, Type::Bool);
    if (!pr.max.empty()) {
      const FieldDecl* m = cls_->find_field(pr.max);
      bool ok = m ? m->type == Type::Int
                  : std::any_of(cls_->ghost_params.begin(), cls_->ghost_params.end(),
                                [&](const Param& p) { return p.name == pr.max && p.type == Type::Int; });
      if (!ok) diag(f.loc, "protocol bound '" + pr.max + "' must be an int ghost or final field");
    }
  }

  void check_method(const MethodDecl& m) {
    method_ = &m;
    for (const auto& c : m.requires_) check_res(c.res);
    for (const auto& c : m.ensures) check_res(c.res);
    ghost_locals_.clear();
    ghost_locals_.emplace_back();
    loop_depth_ = 0;
    for (size_t i = 0; i < m.body.size(); ++i) {
      const auto& s = m.body[i];
      if (s->kind == Stmt::Kind::Return && i + 1 != m.body.size()) {
        diag(s->loc, "return must be the last statement of a method");
      }
      check_stmt(s);
    }
    if (m.return_type != Type::Void && (m.body.empty() || m.body.back()->kind != Stmt::Kind::Return)) {
      diag(m.end_loc, "method '" + m.name + "' must end with a return statement");
    }
    method_ = nullptr;
  }

  // Non-ghost code may not read ghost state.
  void check_no_ghost_reads(const ExprPtr& e) {
    if (!e) return;
    if (is_ghost_var(*e)) diag(e->loc, "program code reads ghost variable '" + e->name + "'");
    for (const auto& a : e->args) check_no_ghost_reads(a);
    if (e->receiver) check_no_ghost_reads(e->receiver);
  }

  bool is_effect_call(const ExprPtr& e) const {
    return e->kind == Expr::Kind::New ||
           (e->kind == Expr::Kind::Call &&
            (e->call == CallKind::Method || e->call == CallKind::CellGet || e->call == CallKind::CellSet ||
             e->call == CallKind::CellCas));
  }

  void check_nested_effects(const ExprPtr& e, bool top) {
    if (!e) return;
    if (!top && is_effect_call(e)) diag(e->loc, "calls with side effects must not be nested in expressions");
    for (const auto& a : e->args) check_nested_effects(a, false);
  }

  void check_assign_target(const Stmt& s, const ExprPtr& target) {
    bool ghost_target = is_ghost_var(*target);
    if (s.ghost && !ghost_target) {
      diag(s.loc, "ghost statement assigns to program variable '" + target->name + "'");
    }
    if (!s.ghost && ghost_target) diag(s.loc, "program code assigns ghost variable '" + target->name + "'");
    if (target->binding == Binding::Param || target->binding == Binding::GhostParam) {
      diag(s.loc, "parameters are read-only");
    }
    if (target->binding == Binding::FinalField && !method_->constructor) {
      diag(s.loc, "final field '" + target->name + "' assigned outside the constructor");
    }
    if (target->binding == Binding::Role || target->binding == Binding::Result) {
      diag(s.loc, "invalid assignment target");
    }
  }

  void check_stmt(const StmtPtr& s) {
    switch (s->kind) {
      case Stmt::Kind::LocalDecl:
        if (s->value) {
          check_expr(s->value);
          check_nested_effects(s->value, true);
          if (s->value->kind == Expr::Kind::New) diag(s->loc, "AtomicInteger must be stored in a cell field");
          if (!s->ghost) check_no_ghost_reads(s->value);
          if (!assignable(s->decl_type, s->value->type)) {
            diag(s->loc, "cannot initialise " + type_name(s->decl_type) + " '" + s->name + "' with " +
                             type_name(s->value->type));
          }
        }
        if (s->ghost) ghost_locals_.back().insert(s->name);
        break;
      case Stmt::Kind::Assign:
      case Stmt::Kind::GhostSet: {
        check_expr(s->value);
        check_nested_effects(s->value, true);
        check_assign_target(*s, s->target);
        if (!s->ghost) check_no_ghost_reads(s->value);
        if (s->value->kind == Expr::Kind::New) {
          if (s->target->binding != Binding::CellField) diag(s->loc, "AtomicInteger must be stored in a cell field");
          if (!method_->constructor) diag(s->loc, "atomic cells are created only in the constructor");
        } else if (s->target->binding == Binding::CellField) {
          diag(s->loc, "cell fields may only be assigned a new AtomicInteger");
        } else if (!assignable(s->target->type, s->value->type)) {
          diag(s->loc, "cannot assign " + type_name(s->value->type) + " to " + type_name(s->target->type));
        }
        break;
      }
      case Stmt::Kind::ExprStmt:
        check_expr(s->value);
        check_nested_effects(s->value, true);
        if (!s->ghost) check_no_ghost_reads(s->value);
        if (!is_effect_call(s->value)) diag(s->loc, "expression statement has no effect");
        break;
      case Stmt::Kind::Assert:
        check_pure(s->value);
        break;
      case Stmt::Kind::Return:
        if (loop_depth_ > 0) diag(s->loc, "return inside a loop is not supported");
        if (s->value) {
          check_expr(s->value);
          if (!assignable(method_->return_type, s->value->type)) diag(s->loc, "return type mismatch");
        } else if (method_->return_type != Type::Void) {
          diag(s->loc, "missing return value");
        }
        break;
      case Stmt::Kind::If:
        check_pure(s->cond);
        if (!s->ghost) check_no_ghost_reads(s->cond);
        check_block(s->body);
        check_block(s->else_body);
        break;
      case Stmt::Kind::While:
        check_pure(s->cond);
        if (!s->ghost) check_no_ghost_reads(s->cond);
        for (const auto& inv : s->invariants) check_res(inv);
        ++loop_depth_;
        check_block(s->body);
        --loop_depth_;
        break;
      case Stmt::Kind::Block:
        check_block(s->body);
        break;
      case Stmt::Kind::Fold:
      case Stmt::Kind::Unfold: {
        check_res(s->pred);
        const PredicateDecl* pd = s->pred->receiver ? nullptr : cls_->find_predicate(s->pred->name);
        if (!pd || pd->abstract) diag(s->loc, "cannot fold or unfold abstract predicate '" + s->pred->name + "'");
        break;
      }
    }
  }

  void check_block(const std::vector<StmtPtr>& body) {
    ghost_locals_.emplace_back();
    for (const auto& s : body) {
      if (s->kind == Stmt::Kind::Return) diag(s->loc, "return must be the last statement of a method");
      check_stmt(s);
    }
    ghost_locals_.pop_back();
  }

  void check_harness(const Harness& h) {
    const ClassDecl* cls = prog_.find_class(h.class_name);
    if (!cls) return;
    const MethodDecl* ctor = cls->constructor();
    for (const auto& w : h.ctor_with) {
      auto named = [&](const Param& p) { return p.name == w.name; };
      bool known = (ctor && std::any_of(ctor->ghost_params.begin(), ctor->ghost_params.end(), named)) ||
                   std::any_of(cls->ghost_params.begin(), cls->ghost_params.end(), named);
      if (!known) diag(h.loc, "no ghost parameter '" + w.name + "' for the constructor or class");
    }
    if (h.threads.empty()) diag(h.loc, "harness declares no threads");
  }
};

}  // namespace

std::vector<Diagnostic> wellformed(const Program& program) { return Checker(program).run(); }

}  // namespace svl
