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

#include "svl/oracle.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>

namespace svl {

namespace {

using Store = std::map<std::string, Rational>;

struct Instr {
  enum class Op { Assign, Get, Set, Cas, NewCell, Call, Jump, Branch, LoopEnter, LoopHead, Return };
  Op op = Op::Assign;
  std::string target;  // receives the value; empty when discarded
  bool to_field = false;
  const Expr* expr = nullptr;  // value, condition or call
  size_t jump = 0;
  int loop = 0;
  SourceLoc loc;

  bool visible() const { return op == Op::Get || op == Op::Set || op == Op::Cas; }
};

using Code = std::vector<Instr>;

bool is_field_binding(Binding b) {
  return b == Binding::Field || b == Binding::FinalField || b == Binding::GhostField || b == Binding::CellField;
}

/// Flattens a method body into jumps and instructions; ghost code is dropped.
class Compiler {
 public:
  Code compile(const std::vector<StmtPtr>& body) {
    stmts(body);
    return std::move(code_);
  }

 private:
  size_t emit(Instr in) {
    code_.push_back(std::move(in));
    return code_.size() - 1;
  }

  void stmts(const std::vector<StmtPtr>& body) {
    for (const auto& s : body) stmt(*s);
  }

  void assign(const std::string& target, bool to_field, const Expr* value, SourceLoc loc) {
    Instr in;
    in.target = target;
    in.to_field = to_field;
    in.expr = value;
    in.loc = value ? value->loc : loc;
    if (value && value->kind == Expr::Kind::New) {
      in.op = Instr::Op::NewCell;
    } else if (value && value->kind == Expr::Kind::Call) {
      switch (value->call) {
        case CallKind::CellGet: in.op = Instr::Op::Get; break;
        case CallKind::CellSet: in.op = Instr::Op::Set; break;
        case CallKind::CellCas: in.op = Instr::Op::Cas; break;
        case CallKind::Method: in.op = Instr::Op::Call; break;
        default: break;
      }
    }
    emit(std::move(in));
  }

  void stmt(const Stmt& s) {
    if (s.ghost) return;
    switch (s.kind) {
      case Stmt::Kind::LocalDecl: assign(s.name, false, s.value.get(), s.loc); break;
      case Stmt::Kind::Assign: {
        const Expr& t = *s.target;
        bool field = t.kind == Expr::Kind::FieldAccess || is_field_binding(t.binding);
        assign(t.name, field, s.value.get(), s.loc);
        break;
      }
      case Stmt::Kind::ExprStmt: assign("", false, s.value.get(), s.loc); break;
      case Stmt::Kind::Block: stmts(s.body); break;
      case Stmt::Kind::If: {
        size_t br = emit({Instr::Op::Branch, "", false, s.cond.get(), 0, 0, s.loc});
        stmts(s.body);
        if (s.has_else) {
          size_t j = emit({Instr::Op::Jump, "", false, nullptr, 0, 0, s.loc});
          code_[br].jump = code_.size();
          stmts(s.else_body);
          code_[j].jump = code_.size();
        } else {
          code_[br].jump = code_.size();
        }
        break;
      }
      case Stmt::Kind::While: {
        int id = loops_++;
        emit({Instr::Op::LoopEnter, "", false, nullptr, 0, id, s.loc});
        size_t head = emit({Instr::Op::Branch, "", false, s.cond.get(), 0, 0, s.loc});
        emit({Instr::Op::LoopHead, "", false, nullptr, 0, id, s.loc});
        stmts(s.body);
        emit({Instr::Op::Jump, "", false, nullptr, head, 0, s.loc});
        code_[head].jump = code_.size();
        break;
      }
      case Stmt::Kind::Return: emit({Instr::Op::Return, "", false, s.value.get(), 0, 0, s.loc}); break;
      case Stmt::Kind::Fold:
      case Stmt::Kind::Unfold:
      case Stmt::Kind::GhostSet:
      case Stmt::Kind::Assert: break;
    }
  }

  Code code_;
  int loops_ = 0;
};

struct Frame {
  const MethodDecl* method = nullptr;
  size_t pc = 0;
  Store locals;
  std::map<int, int> iterations;
  std::string ret_target;
  bool ret_field = false;
};

enum class Status { Running, Done, Stopped };

struct Thread {
  size_t action = 0;
  std::vector<Frame> stack;
  Status status = Status::Running;
  Store views;  // last value of each cell seen by the thread
};

struct Book {
  Rational pool;
  Rational init;
  std::vector<Rational> held;
};

struct State {
  Store fields;
  std::vector<Thread> threads;
  std::map<std::string, Book> books;

  std::string key() const {
    std::ostringstream os;
    for (const auto& [k, v] : fields) os << k << '=' << v << ';';
    for (const auto& t : threads) {
      os << '|' << t.action << ',' << static_cast<int>(t.status);
      for (const auto& [k, v] : t.views) os << ',' << k << '=' << v;
      for (const auto& f : t.stack) {
        os << '[' << f.method->name << ':' << f.pc;
        for (const auto& [k, v] : f.locals) os << ',' << k << '=' << v;
        for (const auto& [k, v] : f.iterations) os << ",#" << k << '=' << v;
        os << ']';
      }
    }
    for (const auto& [c, b] : books) {
      os << '|' << c << ':' << b.pool << ',' << b.init;
      for (const auto& h : b.held) os << ',' << h;
    }
    return os.str();
  }
};

std::string bool_text(const Rational& v) { return v != 0 ? "true" : "false"; }

class Machine {
 public:
  Machine(const Program& p, const Harness& h, const OracleBounds& bounds) : harness_(h), bounds_(bounds) {
    cls_ = p.find_class(h.class_name);
    if (!cls_) throw OracleError("harness " + h.name + ": unknown class " + h.class_name);
    for (const auto& m : cls_->methods) code_[&m] = Compiler().compile(m.body);
    for (size_t i = 0; i < h.threads.size(); ++i) {
      int r = cls_->role_index(h.threads[i].role);
      if (r < 0) throw OracleError("harness " + h.name + ": unknown role " + h.threads[i].role);
      roles_.push_back(r);
      names_.push_back("t" + std::to_string(i));
    }
  }

  size_t thread_count() const { return roles_.size(); }

  /// Runs the constructor and hands out the initial holdings.
  State setup(std::optional<Violation>& violation) const {
    State s;
    for (const auto& w : harness_.ctor_with) {
      for (const auto& g : cls_->ghost_params) {
        if (g.name == w.name) s.fields[g.name] = eval(*w.value, s, {});
      }
    }
    const MethodDecl* ctor = cls_->constructor();
    if (ctor) {
      Thread init;
      init.stack.push_back(make_frame(*ctor, harness_.ctor_args, s, {}));
      while (!init.stack.empty()) {
        Frame& f = init.stack.back();
        const Code& code = code_.at(f.method);
        if (f.pc >= code.size()) {
          init.stack.pop_back();
          continue;
        }
        const Instr& in = code[f.pc];
        if (in.op == Instr::Op::NewCell) {
          new_cell(s, in, f.locals);
          ++f.pc;
        } else if (in.visible()) {
          throw OracleError("constructor performs an atomic operation at " + in.loc.to_string());
        } else {
          local_step(s, init, std::nullopt);
          if (init.status == Status::Stopped) throw OracleError("constructor exceeds the loop cap");
        }
      }
    }
    for (size_t i = 0; i < harness_.threads.size(); ++i) {
      Thread t;
      for (const auto& [cell, amount] : harness_.threads[i].holdings) {
        auto it = s.books.find(cell);
        if (it == s.books.end()) throw OracleError("harness " + harness_.name + ": no cell " + cell);
        Rational a = eval(*amount, s, {});
        it->second.init -= a;
        it->second.held[i] += a;
      }
      for (const auto& [cell, b] : s.books) t.views[cell] = s.fields.at(cell);
      s.threads.push_back(std::move(t));
    }
    violation = overdraw(s, std::nullopt, harness_.loc);
    for (size_t i = 0; i < s.threads.size(); ++i) advance(s, i);
    return s;
  }

  bool enabled(const State& s, size_t t) const { return t < s.threads.size() && s.threads[t].status == Status::Running; }

  /// Executes thread t's pending visible operation, then runs it up to the next one.
  std::string perform(State& s, size_t t, std::optional<Violation>& violation) const {
    Thread& th = s.threads[t];
    std::string who = names_[t] + " (" + cls_->roles()[static_cast<size_t>(roles_[t])] + ") ";
    std::string text;
    if (th.stack.empty()) {
      const HarnessAction& a = harness_.threads[t].actions[th.action];
      Book& b = book(s, a.name, a.loc);
      const Rational& mine = b.held[t];
      bool write = a.kind == HarnessAction::Kind::Write;
      text = who + (write ? "write " : "read ") + a.name;
      if (write ? mine < 1 : mine <= 0) {
        violation = Violation{write ? "write-without-permission" : "read-without-permission", t, a.loc,
                              names_[t] + (write ? " writes " : " reads ") + a.name + " holding " +
                                  rational_to_string(mine),
                              ledger(s)};
      }
      ++th.action;
    } else {
      Frame& f = th.stack.back();
      const Instr& in = code_.at(f.method)[f.pc];
      const Expr& call = *in.expr;
      const std::string& cell = call.receiver->name;
      Book& b = book(s, cell, in.loc);
      Rational r = roles_[t];
      Rational d = th.views.at(cell);
      Rational cur = s.fields.at(cell);
      Rational result;
      switch (in.op) {
        case Instr::Op::Get: {
          result = cur;
          Rational now = share(s, cell, r, cur), before = share(s, cell, r, d);
          move(b.pool, b.held[t], cutoff(now, before));
          move(b.held[t], b.pool, cutoff(before, now));
          th.views[cell] = cur;
          text = who + cell + ".get() = " + rational_to_string(cur);
          break;
        }
        case Instr::Op::Set: {
          Rational n = eval(*call.args.at(0), s, f.locals);
          move(b.held[t], b.pool, share(s, cell, 0, n) + share(s, cell, r, d));
          s.fields[cell] = n;
          th.views[cell] = n;
          text = who + cell + ".set(" + rational_to_string(n) + ")";
          break;
        }
        case Instr::Op::Cas: {
          Rational x = eval(*call.args.at(0), s, f.locals);
          Rational n = eval(*call.args.at(1), s, f.locals);
          if (cur == x) {
            Rational sx = share(s, cell, 0, x), sn = share(s, cell, 0, n);
            move(b.pool, b.held[t], cutoff(sx, sn));
            move(b.held[t], b.pool, cutoff(sn, sx));
            s.fields[cell] = n;
            th.views[cell] = n;
            result = 1;
          } else {
            th.views[cell] = x;
            result = 0;
          }
          text = who + cell + ".compareAndSet(" + rational_to_string(x) + ", " + rational_to_string(n) +
                 ") = " + bool_text(result);
          break;
        }
        default: throw OracleError("not an atomic operation");
      }
      text += " at " + in.loc.to_string();
      if (!in.target.empty()) store(s, f, in.target, in.to_field, result);
      ++f.pc;
      violation = overdraw(s, t, in.loc);
    }
    advance(s, t);
    return text;
  }

  std::vector<LedgerRow> ledger(const State& s) const {
    std::vector<LedgerRow> rows;
    for (const auto& [cell, b] : s.books) {
      rows.push_back({cell, "pool", b.pool});
      rows.push_back({cell, "init", b.init});
      for (size_t i = 0; i < b.held.size(); ++i) rows.push_back({cell, names_[i], b.held[i]});
    }
    return rows;
  }

 private:
  static Rational cutoff(const Rational& a, const Rational& b) { return a >= b ? a - b : Rational(0); }

  static void move(Rational& from, Rational& to, const Rational& amount) {
    from -= amount;
    to += amount;
  }

  Book& book(State& s, const std::string& cell, SourceLoc loc) const {
    auto it = s.books.find(cell);
    if (it == s.books.end()) throw OracleError(loc.to_string() + ": cell " + cell + " used before creation");
    return it->second;
  }

  std::optional<Violation> overdraw(const State& s, std::optional<size_t> t, SourceLoc loc) const {
    for (const auto& row : ledger(s)) {
      if (row.amount < 0) {
        return Violation{"overdraw", t, loc,
                         row.holder + " holds " + rational_to_string(row.amount) + " of " + row.cell +
                             ": the permissions handed out sum to more than 1",
                         ledger(s)};
      }
    }
    return std::nullopt;
  }

  Frame make_frame(const MethodDecl& m, const std::vector<ExprPtr>& args, const State& s, const Store& outer) const {
    if (args.size() != m.params.size()) throw OracleError("method " + m.name + ": argument count mismatch");
    Frame f;
    f.method = &m;
    for (size_t i = 0; i < args.size(); ++i) f.locals[m.params[i].name] = eval(*args[i], s, outer);
    return f;
  }

  static void store(State& s, Frame& f, const std::string& target, bool to_field, const Rational& v) {
    (to_field ? s.fields : f.locals)[target] = v;
  }

  void new_cell(State& s, const Instr& in, const Store& locals) const {
    Rational v = in.expr->args.empty() ? Rational(0) : eval(*in.expr->args[0], s, locals);
    Book b;
    b.init = 1;
    b.held.assign(harness_.threads.size(), Rational(0));
    s.fields[in.target] = v;
    move(b.init, b.pool, share(s, in.target, 0, v));
    s.books[in.target] = std::move(b);
  }

  /// One invisible instruction of the top frame.
  void local_step(State& s, Thread& th, std::optional<size_t>) const {
    Frame& f = th.stack.back();
    const Code& code = code_.at(f.method);
    const Instr& in = code[f.pc];
    switch (in.op) {
      case Instr::Op::Assign:
        store(s, f, in.target, in.to_field, in.expr ? eval(*in.expr, s, f.locals) : Rational(0));
        ++f.pc;
        break;
      case Instr::Op::Branch: f.pc = eval(*in.expr, s, f.locals) != 0 ? f.pc + 1 : in.jump; break;
      case Instr::Op::Jump: f.pc = in.jump; break;
      case Instr::Op::LoopEnter:
        f.iterations[in.loop] = 0;
        ++f.pc;
        break;
      case Instr::Op::LoopHead:
        if (++f.iterations[in.loop] > bounds_.loop_cap) {
          th.status = Status::Stopped;
        } else {
          ++f.pc;
        }
        break;
      case Instr::Op::Call: {
        const MethodDecl* m = cls_->find_method(in.expr->name);
        if (!m) throw OracleError(in.loc.to_string() + ": unknown method " + in.expr->name);
        Frame callee = make_frame(*m, in.expr->args, s, f.locals);
        callee.ret_target = in.target;
        callee.ret_field = in.to_field;
        ++f.pc;
        th.stack.push_back(std::move(callee));
        break;
      }
      case Instr::Op::Return: {
        Rational v = in.expr ? eval(*in.expr, s, f.locals) : Rational(0);
        std::string target = f.ret_target;
        bool field = f.ret_field;
        th.stack.pop_back();
        if (!target.empty() && !th.stack.empty()) store(s, th.stack.back(), target, field, v);
        break;
      }
      case Instr::Op::NewCell: throw OracleError(in.loc.to_string() + ": atomic cell created outside the constructor");
      default: break;
    }
  }

  /// Runs thread t until it reaches a visible operation, finishes or stops.
  void advance(State& s, size_t t) const {
    Thread& th = s.threads[t];
    const auto& actions = harness_.threads[t].actions;
    for (size_t budget = 0; th.status == Status::Running; ++budget) {
      if (budget > 1000000) throw OracleError("thread " + names_[t] + " runs too long without a visible step");
      if (th.stack.empty()) {
        if (th.action >= actions.size()) {
          th.status = Status::Done;
          return;
        }
        const HarnessAction& a = actions[th.action];
        if (a.kind != HarnessAction::Kind::Call) return;
        const MethodDecl* m = cls_->find_method(a.name);
        if (!m) throw OracleError(a.loc.to_string() + ": unknown method " + a.name);
        th.stack.push_back(make_frame(*m, a.args, s, {}));
        ++th.action;
        continue;
      }
      Frame& f = th.stack.back();
      const Code& code = code_.at(f.method);
      if (f.pc >= code.size()) {
        th.stack.pop_back();
        continue;
      }
      if (code[f.pc].visible()) return;
      local_step(s, th, t);
    }
  }

  Rational share(const State& s, const std::string& cell, const Rational& r, const Rational& v) const {
    const FieldDecl* f = cls_->find_field(cell);
    if (!f || !f->protocol) throw OracleError("no protocol for cell " + cell);
    return call_function(f->protocol->share, {r, v}, s);
  }

  Rational call_function(const std::string& name, const std::vector<Rational>& args, const State& s) const {
    const FunctionDecl* fd = cls_->find_function(name);
    if (!fd || !fd->expr) throw OracleError("function " + name + " has no expression body");
    Store env;
    for (size_t i = 0; i < fd->params.size() && i < args.size(); ++i) env[fd->params[i].name] = args[i];
    return eval(*fd->expr, s, env);
  }

  Rational eval(const Expr& e, const State& s, const Store& locals) const {
    auto lookup = [&](const Store& st, const std::string& n) -> Rational {
      auto it = st.find(n);
      if (it == st.end()) throw OracleError(e.loc.to_string() + ": no value for " + n);
      return it->second;
    };
    switch (e.kind) {
      case Expr::Kind::IntLit: return Rational(e.int_value);
      case Expr::Kind::BoolLit: return e.bool_value ? 1 : 0;
      case Expr::Kind::Var:
        if (e.binding == Binding::Role) return cls_->role_index(e.name);
        if (is_field_binding(e.binding)) return lookup(s.fields, e.name);
        return lookup(locals, e.name);
      case Expr::Kind::FieldAccess: return lookup(s.fields, e.name);
      case Expr::Kind::Unary: {
        Rational a = eval(*e.args[0], s, locals);
        if (e.op == "!") return a == 0 ? 1 : 0;
        if (e.op == "-") return -a;
        return a;
      }
      case Expr::Kind::Binary: {
        const std::string& op = e.op;
        if (op == "&&" || op == "||" || op == "==>") {
          bool a = eval(*e.args[0], s, locals) != 0;
          if (op == "&&" && !a) return 0;
          if (op == "||" && a) return 1;
          if (op == "==>" && !a) return 1;
          return eval(*e.args[1], s, locals) != 0 ? 1 : 0;
        }
        Rational a = eval(*e.args[0], s, locals);
        Rational b = eval(*e.args[1], s, locals);
        if (op == "+") return a + b;
        if (op == "-") return e.type == Type::Frac ? cutoff(a, b) : a - b;
        if (op == "*") return a * b;
        if (op == "/") {
          if (b == 0) throw OracleError(e.loc.to_string() + ": division by zero");
          return a / b;
        }
        if (op == "%") {
          if (b == 0) throw OracleError(e.loc.to_string() + ": division by zero");
          return Rational(numerator(a) % numerator(b));
        }
        if (op == "==") return a == b ? 1 : 0;
        if (op == "!=") return a != b ? 1 : 0;
        if (op == "<") return a < b ? 1 : 0;
        if (op == "<=") return a <= b ? 1 : 0;
        if (op == ">") return a > b ? 1 : 0;
        if (op == ">=") return a >= b ? 1 : 0;
        throw OracleError(e.loc.to_string() + ": unsupported operator " + op);
      }
      case Expr::Kind::Ternary:
        return eval(*e.args[0], s, locals) != 0 ? eval(*e.args[1], s, locals) : eval(*e.args[2], s, locals);
      case Expr::Kind::Call:
        if (e.call == CallKind::Function) {
          std::vector<Rational> args;
          for (const auto& a : e.args) args.push_back(eval(*a, s, locals));
          return call_function(e.name, args, s);
        }
        throw OracleError(e.loc.to_string() + ": call to " + e.name + " inside an expression");
      default: throw OracleError(e.loc.to_string() + ": expression not executable");
    }
  }

  const Harness& harness_;
  OracleBounds bounds_;
  const ClassDecl* cls_ = nullptr;
  std::map<const MethodDecl*, Code> code_;
  std::vector<int> roles_;
  std::vector<std::string> names_;
};

size_t stopped_count(const State& s) {
  return static_cast<size_t>(std::count_if(s.threads.begin(), s.threads.end(),
                                           [](const Thread& t) { return t.status == Status::Stopped; }));
}

}  // namespace

std::string oracle_verdict_name(OracleVerdict v) {
  switch (v) {
    case OracleVerdict::Clean: return "clean";
    case OracleVerdict::Violation: return "violation";
    case OracleVerdict::BoundExceeded: return "bound-exceeded";
  }
  return "";
}

std::string ledger_to_string(const std::vector<LedgerRow>& rows) {
  std::string out;
  std::string cell;
  for (const auto& r : rows) {
    if (r.cell != cell) {
      if (!cell.empty()) out += "; ";
      out += r.cell + ":";
      cell = r.cell;
    }
    out += " " + r.holder + "=" + rational_to_string(r.amount);
  }
  return out;
}

Exploration explore(const Program& p, const Harness& h, const OracleBounds& bounds) {
  Machine m(p, h, bounds);
  Exploration result;
  result.harness = h.name;
  std::optional<Violation> violation;
  State init = m.setup(violation);
  if (violation) {
    result.verdict = OracleVerdict::Violation;
    result.violation = std::move(violation);
    result.states = 1;
    return result;
  }
  std::unordered_set<std::string> visited;
  std::vector<size_t> schedule;
  bool done = false;
  bool exceeded = false;
  std::function<void(const State&)> dfs = [&](const State& s) {
    if (!visited.insert(s.key()).second) return;
    if (visited.size() > bounds.max_states) {
      exceeded = done = true;
      return;
    }
    size_t stopped = stopped_count(s);
    for (size_t t = 0; t < m.thread_count() && !done; ++t) {
      if (!m.enabled(s, t)) continue;
      if (schedule.size() >= bounds.max_steps) {
        exceeded = true;
        return;
      }
      State next = s;
      std::optional<Violation> v;
      schedule.push_back(t);
      m.perform(next, t, v);
      ++result.transitions;
      if (v) {
        result.violation = std::move(v);
        result.schedule = schedule;
        done = true;
        return;
      }
      if (stopped_count(next) > stopped) ++result.pruned;
      dfs(next);
      schedule.pop_back();
    }
  };
  dfs(init);
  result.states = visited.size();
  if (result.violation) {
    result.verdict = OracleVerdict::Violation;
  } else if (exceeded) {
    result.verdict = OracleVerdict::BoundExceeded;
  }
  return result;
}

Trace replay(const Program& p, const Harness& h, const std::vector<size_t>& schedule, const OracleBounds& bounds) {
  Machine m(p, h, bounds);
  Trace trace;
  std::optional<Violation> violation;
  State s = m.setup(violation);
  trace.steps.push_back({std::nullopt, "initial state", m.ledger(s)});
  if (violation) {
    trace.violation = std::move(violation);
    return trace;
  }
  for (size_t i = 0; i < schedule.size(); ++i) {
    size_t t = schedule[i];
    if (!m.enabled(s, t)) {
      throw ScheduleInfeasible("step " + std::to_string(i) + ": thread t" + std::to_string(t) + " is not enabled");
    }
    std::string text = m.perform(s, t, violation);
    trace.steps.push_back({t, std::move(text), m.ledger(s)});
    if (violation) {
      trace.violation = std::move(violation);
      break;
    }
  }
  return trace;
}

}  // namespace svl
