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

#include <sstream>

#include "svl/frontend.hpp"

namespace svl {

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Binary: {
      const std::string& op = e.op;
      if (op == "==>") return 1;
      if (op == "**") return 2;
      if (op == "||") return 4;
      if (op == "&&") return 5;
      if (op == "==" || op == "!=") return 6;
      if (op == "<" || op == "<=" || op == ">" || op == ">=") return 7;
      if (op == "+" || op == "-") return 8;
      return 9;
    }
    case Expr::Kind::Ternary:
      return 3;
    case Expr::Kind::Unary:
      return 10;
    default:
      return 11;
  }
}

class ExprPrinter {
 public:
  explicit ExprPrinter(bool in_annotation) : in_annotation_(in_annotation) {}

  std::string print(const Expr& e, int min_prec = 0) {
    std::string s = raw(e);
    if (precedence(e) < min_prec) return "(" + s + ")";
    return s;
  }

 private:
  bool in_annotation_;

  std::string args(const std::vector<ExprPtr>& as) {
    std::string out = "(";
    for (size_t i = 0; i < as.size(); ++i) {
      if (i) out += ", ";
      out += print(*as[i]);
    }
    return out + ")";
  }

  std::string with(const Expr& e) {
    if (e.with.empty()) return "";
    std::string out = "with {";
    for (size_t i = 0; i < e.with.size(); ++i) {
      if (i) out += ", ";
      out += e.with[i].name + " = " + print(*e.with[i].value, 3);
    }
    out += "}";
    return in_annotation_ ? " " + out : " /*@ " + out + " @*/";
  }

  std::string raw(const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::IntLit:
        return e.int_value.str();
      case K::BoolLit:
        return e.bool_value ? "true" : "false";
      case K::Var:
        return e.name;
      case K::Result:
        return "\\result";
      case K::This:
        return "this";
      case K::Wildcard:
        return "_";
      case K::Existential:
        return "?" + e.name;
      case K::Unary:
        return e.op + print(*e.args[0], 10);
      case K::Binary: {
        int p = precedence(e);
        bool right_assoc = e.op == "==>";
        return print(*e.args[0], right_assoc ? p + 1 : p) + " " + e.op + " " +
               print(*e.args[1], right_assoc ? p : p + 1);
      }
      case K::Ternary:
        return print(*e.args[0], 4) + " ? " + print(*e.args[1], 3) + " : " + print(*e.args[2], 3);
      case K::Call: {
        std::string recv = e.receiver ? print(*e.receiver, 11) + "." : "";
        return recv + e.name + args(e.args) + with(e);
      }
      case K::FieldAccess:
        return print(*e.receiver, 11) + "." + e.name;
      case K::New:
        return "new " + e.name + args(e.args) + with(e);
      case K::ForallStar:
        return "(\\forall* " + type_name(e.binder_type) + " " + e.name + "; " + print(*e.args[0]) + "; " +
               print(*e.args[1]) + ")";
    }
    return "?";
  }
};

std::string params_str(const std::vector<Param>& ps) {
  std::string out = "(";
  for (size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ", ";
    out += type_name(ps[i].type) + " " + ps[i].name;
  }
  return out + ")";
}

class ProgramPrinter {
 public:
  std::string print(const Program& p) {
    for (const auto& cls : p.classes) print_class(cls);
    for (const auto& h : p.harnesses) print_harness(h);
    return out_.str();
  }

 private:
  std::ostringstream out_;

  static std::string ex(const ExprPtr& e, bool annot) { return ExprPrinter(annot).print(*e); }

  void indent(int n) { out_ << std::string(n * 2, ' '); }

  void print_class(const ClassDecl& cls) {
    for (const auto& pd : cls.predicates) {
      if (!is_given_pred(pd)) continue;
      out_ << "/*@ given " << (pd.group ? "group " : "") << "(";
      for (size_t i = 0; i < pd.params.size(); ++i) out_ << (i ? ", " : "") << type_name(pd.params[i].type);
      out_ << " -> resource) " << pd.name << "; @*/\n";
    }
    for (const auto& gp : cls.ghost_params) out_ << "/*@ given " << type_name(gp.type) << " " << gp.name << "; @*/\n";
    out_ << "class " << cls.name << " {\n";
    for (const auto& f : cls.fields) {
      indent(1);
      if (f.ghost) {
        out_ << "/*@ ghost " << type_name(f.type) << " " << f.name << "; @*/\n";
      } else if (f.protocol) {
        const auto& pr = *f.protocol;
        out_ << "AtomicInteger/*@<" << pr.roles << ", " << pr.inv << ", " << pr.share << ", " << pr.trans
             << (pr.max.empty() ? "" : ", " + pr.max) << ">@*/ " << f.name << ";\n";
      } else {
        out_ << (f.is_final ? "final " : "") << type_name(f.type) << " " << f.name << ";\n";
      }
    }
    for (const auto& rs : cls.role_sets) {
      indent(1);
      out_ << "/*@ roles " << rs.name << " = {";
      for (size_t i = 0; i < rs.roles.size(); ++i) out_ << (i ? ", " : "") << rs.roles[i];
      out_ << "}; @*/\n";
    }
    for (const auto& pd : cls.predicates) {
      if (is_given_pred(pd)) continue;
      indent(1);
      out_ << "/*@ " << (pd.group ? "group " : "") << "resource " << pd.name << params_str(pd.params);
      if (pd.body_expr) out_ << " = " << ex(pd.body_expr, true);
      out_ << "; @*/\n";
    }
    for (const auto& fd : cls.functions) {
      indent(1);
      out_ << "/*@ " << type_name(fd.return_type) << " " << fd.name << params_str(fd.params) << " {\n";
      for (const auto& s : fd.body) print_stmt(*s, 2, true);
      indent(1);
      out_ << "} @*/\n";
    }
    for (const auto& m : cls.methods) print_method(m);
    out_ << "}\n";
  }

  static bool is_given_pred(const PredicateDecl& pd) { return pd.given; }

  void print_method(const MethodDecl& m) {
    if (!m.ghost_params.empty() || !m.requires_.empty() || !m.ensures.empty()) {
      indent(1);
      out_ << "/*@";
      if (!m.ghost_params.empty()) {
        out_ << " given ";
        for (size_t i = 0; i < m.ghost_params.size(); ++i) {
          out_ << (i ? ", " : "") << type_name(m.ghost_params[i].type) << " " << m.ghost_params[i].name;
        }
        out_ << ";";
      }
      for (const auto& c : m.requires_) out_ << "\n    requires " << ex(c.expr, true) << ";";
      for (const auto& c : m.ensures) out_ << "\n    ensures " << ex(c.expr, true) << ";";
      out_ << " @*/\n";
    }
    indent(1);
    if (!m.constructor) out_ << type_name(m.return_type) << " ";
    out_ << m.name << params_str(m.params) << " {\n";
    for (const auto& s : m.body) print_stmt(*s, 2, false);
    indent(1);
    out_ << "}\n";
  }

  void open(bool ghost, bool annot) {
    if (ghost && !annot) out_ << "/*@ ";
  }
  void close(bool ghost, bool annot) {
    if (ghost && !annot) out_ << " @*/";
  }

  void print_body(const std::vector<StmtPtr>& body, int depth, bool annot) {
    out_ << "{\n";
    for (const auto& s : body) print_stmt(*s, depth + 1, annot);
    indent(depth);
    out_ << "}";
  }

  void print_stmt(const Stmt& s, int depth, bool annot) {
    bool wrap = s.ghost && !annot;
    bool inner = annot || s.ghost;
    indent(depth);
    open(wrap, annot);
    switch (s.kind) {
      case Stmt::Kind::LocalDecl:
        out_ << (s.ghost ? "ghost " : "") << type_name(s.decl_type) << " " << s.name;
        if (s.value) out_ << " = " << ex(s.value, inner);
        out_ << ";";
        break;
      case Stmt::Kind::Assign:
        out_ << ex(s.target, inner) << " = " << ex(s.value, inner) << ";";
        break;
      case Stmt::Kind::GhostSet:
        out_ << "set " << ex(s.target, inner) << " = " << ex(s.value, inner) << ";";
        break;
      case Stmt::Kind::ExprStmt:
        out_ << ex(s.value, inner) << ";";
        break;
      case Stmt::Kind::Assert:
        out_ << "assert " << ex(s.value, inner) << ";";
        break;
      case Stmt::Kind::Return:
        out_ << "return";
        if (s.value) out_ << " " << ex(s.value, inner);
        out_ << ";";
        break;
      case Stmt::Kind::Fold:
      case Stmt::Kind::Unfold:
        out_ << (s.kind == Stmt::Kind::Fold ? "fold " : "unfold ") << ex(s.value, inner) << ";";
        break;
      case Stmt::Kind::If:
        out_ << "if (" << ex(s.cond, inner) << ") ";
        print_body(s.body, depth, inner);
        if (s.has_else) {
          out_ << " else ";
          print_body(s.else_body, depth, inner);
        }
        break;
      case Stmt::Kind::While:
        out_ << "while (" << ex(s.cond, inner) << ")";
        for (const auto& inv : s.invariant_exprs) {
          out_ << "\n";
          indent(depth + 2);
          out_ << (inner ? "" : "/*@ ") << "loop_invariant " << ex(inv, true) << ";" << (inner ? "" : " @*/");
        }
        out_ << "\n";
        indent(depth);
        print_body(s.body, depth, inner);
        break;
      case Stmt::Kind::Block:
        print_body(s.body, depth, inner);
        break;
    }
    close(wrap, annot);
    out_ << "\n";
  }

  void print_harness(const Harness& h) {
    out_ << "/*@ harness " << h.name << " for " << h.class_name << " {\n  new " << h.class_name << "(";
    for (size_t i = 0; i < h.ctor_args.size(); ++i) out_ << (i ? ", " : "") << ex(h.ctor_args[i], true);
    out_ << ")";
    if (!h.ctor_with.empty()) {
      out_ << " with {";
      for (size_t i = 0; i < h.ctor_with.size(); ++i) {
        out_ << (i ? ", " : "") << h.ctor_with[i].name << " = " << ex(h.ctor_with[i].value, true);
      }
      out_ << "}";
    }
    out_ << ";\n";
    for (const auto& th : h.threads) {
      out_ << "  thread " << th.role;
      if (!th.holdings.empty()) {
        out_ << " holds ";
        for (size_t i = 0; i < th.holdings.size(); ++i) {
          out_ << (i ? ", " : "") << th.holdings[i].first << " " << ex(th.holdings[i].second, true);
        }
      }
      out_ << " {";
      for (const auto& a : th.actions) {
        switch (a.kind) {
          case HarnessAction::Kind::Read: out_ << " read " << a.name << ";"; break;
          case HarnessAction::Kind::Write: out_ << " write " << a.name << ";"; break;
          case HarnessAction::Kind::Call: {
            out_ << " " << a.name << "(";
            for (size_t i = 0; i < a.args.size(); ++i) out_ << (i ? ", " : "") << ex(a.args[i], true);
            out_ << ");";
            break;
          }
        }
      }
      out_ << " }\n";
    }
    out_ << "} @*/\n";
  }
};

// ---- structural dump ----

void dump_expr(std::ostream& os, const ExprPtr& e) {
  if (!e) {
    os << "nil";
    return;
  }
  os << "(" << static_cast<int>(e->kind) << " " << e->name << " " << e->op << " " << e->int_value.str() << " "
     << e->bool_value << " " << static_cast<int>(e->binder_type) << " [";
  for (const auto& a : e->args) dump_expr(os, a);
  os << "] ";
  dump_expr(os, e->receiver);
  os << " {";
  for (const auto& w : e->with) {
    os << w.name << "=";
    dump_expr(os, w.value);
  }
  os << "})";
}

void dump_stmts(std::ostream& os, const std::vector<StmtPtr>& body);

void dump_stmt(std::ostream& os, const Stmt& s) {
  os << "(stmt " << static_cast<int>(s.kind) << " g" << s.ghost << " " << static_cast<int>(s.decl_type) << " " << s.name
     << " ";
  dump_expr(os, s.target);
  dump_expr(os, s.value);
  dump_expr(os, s.cond);
  dump_stmts(os, s.body);
  os << " else" << s.has_else;
  dump_stmts(os, s.else_body);
  os << " inv[";
  for (const auto& i : s.invariant_exprs) dump_expr(os, i);
  os << "])";
}

void dump_stmts(std::ostream& os, const std::vector<StmtPtr>& body) {
  os << "[";
  for (const auto& s : body) dump_stmt(os, *s);
  os << "]";
}

void dump_params(std::ostream& os, const std::vector<Param>& ps) {
  os << "(";
  for (const auto& p : ps) os << static_cast<int>(p.type) << ":" << p.name << " ";
  os << ")";
}

}  // namespace

std::string expr_to_string(const Expr& e) { return ExprPrinter(true).print(e); }

std::string resource_to_string(const Resource& r) {
  switch (r.kind) {
    case Resource::Kind::Emp:
      return "emp";
    case Resource::Kind::Pure:
      return expr_to_string(*r.cond);
    case Resource::Kind::Star:
      return resource_to_string(*r.left) + " ** " + resource_to_string(*r.right);
    case Resource::Kind::Implies:
      return expr_to_string(*r.cond) + " ==> " + resource_to_string(*r.right);
    case Resource::Kind::IterStar:
      return "(\\forall* int " + r.binder + "; " + expr_to_string(*r.cond) + "; " + resource_to_string(*r.right) +
             ")";
    case Resource::Kind::PointsTo:
      return "PointsTo(" + r.name + ", " + expr_to_string(*r.perm) + ", " + expr_to_string(*r.value) + ")";
    case Resource::Kind::Pred: {
      std::string out = r.receiver ? expr_to_string(*r.receiver) + "." : "";
      out += r.name + "(";
      for (size_t i = 0; i < r.args.size(); ++i) out += (i ? ", " : "") + expr_to_string(*r.args[i]);
      return out + ")";
    }
  }
  return "?";
}

std::string pretty_print(const Program& program) { return ProgramPrinter().print(program); }

std::string structural_dump(const Program& program) {
  std::ostringstream os;
  for (const auto& cls : program.classes) {
    os << "(class " << cls.name << " given";
    dump_params(os, cls.ghost_params);
    for (const auto& f : cls.fields) {
      os << " (field " << f.name << " " << static_cast<int>(f.type) << " " << f.ghost << f.is_final;
      if (f.protocol) {
        os << " <" << f.protocol->roles << "," << f.protocol->inv << "," << f.protocol->share << ","
           << f.protocol->trans << "," << f.protocol->max << ">";
      }
      os << ")";
    }
    for (const auto& rs : cls.role_sets) {
      os << " (roles " << rs.name;
      for (const auto& r : rs.roles) os << " " << r;
      os << ")";
    }
    for (const auto& p : cls.predicates) {
      os << " (pred " << p.name << " " << p.group << p.abstract;
      dump_params(os, p.params);
      dump_expr(os, p.body_expr);
      os << ")";
    }
    for (const auto& f : cls.functions) {
      os << " (fun " << f.name << " " << static_cast<int>(f.return_type);
      dump_params(os, f.params);
      dump_stmts(os, f.body);
      os << ")";
    }
    for (const auto& m : cls.methods) {
      os << " (method " << m.name << " " << m.constructor << " " << static_cast<int>(m.return_type);
      dump_params(os, m.params);
      dump_params(os, m.ghost_params);
      os << " req[";
      for (const auto& c : m.requires_) dump_expr(os, c.expr);
      os << "] ens[";
      for (const auto& c : m.ensures) dump_expr(os, c.expr);
      os << "] ";
      dump_stmts(os, m.body);
      os << ")";
    }
    os << ")\n";
  }
  for (const auto& h : program.harnesses) {
    os << "(harness " << h.name << " " << h.class_name << " [";
    for (const auto& a : h.ctor_args) dump_expr(os, a);
    os << "] {";
    for (const auto& w : h.ctor_with) {
      os << w.name << "=";
      dump_expr(os, w.value);
    }
    os << "}";
    for (const auto& th : h.threads) {
      os << " (thread " << th.role;
      for (const auto& [c, f] : th.holdings) {
        os << " " << c << ":";
        dump_expr(os, f);
      }
      for (const auto& a : th.actions) {
        os << " " << static_cast<int>(a.kind) << a.name << "[";
        for (const auto& x : a.args) dump_expr(os, x);
        os << "]";
      }
      os << ")";
    }
    os << ")\n";
  }
  return os.str();
}

}  // namespace svl
