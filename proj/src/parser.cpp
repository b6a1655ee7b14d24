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

#include <cctype>
#include <set>

#include "frontend_internal.hpp"
#include "svl/frontend.hpp"

namespace svl {

ExprPtr make_int(BigInt v, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::IntLit;
  e->int_value = std::move(v);
  e->loc = loc;
  return e;
}

ExprPtr make_bool(bool v, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::BoolLit;
  e->bool_value = v;
  e->loc = loc;
  return e;
}

ExprPtr make_var(std::string name, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->name = std::move(name);
  e->loc = loc;
  return e;
}

ExprPtr make_binary(std::string op, ExprPtr a, ExprPtr b, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Binary;
  e->op = std::move(op);
  e->args = {std::move(a), std::move(b)};
  e->loc = loc;
  return e;
}

ExprPtr make_unary(std::string op, ExprPtr a, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Unary;
  e->op = std::move(op);
  e->args = {std::move(a)};
  e->loc = loc;
  return e;
}

std::vector<Token> lex(std::string_view src) {
  static const char* kPuncts[] = {"==>", "**", "==", "!=", "<=", ">=", "&&", "||", "->", "<", ">", "+",
                                  "-",   "*",  "/",  "%",  "!",  "?",  ":",  ";",  ",",  ".",  "(", ")",
                                  "{",   "}",  "="};
  std::vector<Token> out;
  int line = 1, col = 1;
  bool in_annotation = false;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.compare(i, 3, "/*@") == 0) {
      if (in_annotation) throw ParseError({line, col}, "nested annotation");
      in_annotation = true;
      advance(3);
      continue;
    }
    if (src.compare(i, 3, "@*/") == 0) {
      if (!in_annotation) throw ParseError({line, col}, "unmatched annotation end");
      in_annotation = false;
      advance(3);
      continue;
    }
    if (src.compare(i, 2, "//") == 0) {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.compare(i, 2, "/*") == 0) {
      SourceLoc start{line, col};
      advance(2);
      while (i < src.size() && src.compare(i, 2, "*/") != 0) advance(1);
      if (i >= src.size()) throw ParseError(start, "unterminated comment");
      advance(2);
      continue;
    }
    Token tok;
    tok.loc = {line, col};
    tok.annotation = in_annotation;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '\\') {
      size_t j = i + 1;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      if (c == '\\' && j < src.size() && src[j] == '*') ++j;  // \forall*
      tok.kind = Token::Kind::Ident;
      tok.text = std::string(src.substr(i, j - i));
      if (tok.text == "\\") throw ParseError(tok.loc, "stray backslash");
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      tok.kind = Token::Kind::Int;
      tok.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }
    bool matched = false;
    for (const char* p : kPuncts) {
      size_t n = std::char_traits<char>::length(p);
      if (src.compare(i, n, p) == 0) {
        tok.kind = Token::Kind::Punct;
        tok.text = p;
        advance(n);
        out.push_back(std::move(tok));
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError({line, col}, std::string("unexpected character '") + c + "'");
  }
  if (in_annotation) throw ParseError({line, col}, "unterminated annotation");
  Token end;
  end.kind = Token::Kind::End;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

namespace {

const std::set<std::string> kModifiers = {"public", "private", "protected", "final", "volatile", "static"};

std::optional<Type> type_keyword(const std::string& s) {
  if (s == "int") return Type::Int;
  if (s == "boolean") return Type::Bool;
  if (s == "frac") return Type::Frac;
  if (s == "role") return Type::Role;
  if (s == "void") return Type::Void;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program parse_program() {
    Program prog;
    std::vector<Param> given_params;
    std::vector<PredicateDecl> given_preds;
    while (!at_end()) {
      if (peek_is("given")) {
        parse_class_given(given_params, given_preds);
        continue;
      }
      if (peek_is("harness")) {
        prog.harnesses.push_back(parse_harness());
        continue;
      }
      skip_modifiers();
      if (peek_is("class")) {
        ClassDecl cls = parse_class();
        cls.ghost_params = std::move(given_params);
        for (auto& p : given_preds) cls.predicates.insert(cls.predicates.begin(), p);
        given_params.clear();
        given_preds.clear();
        prog.classes.push_back(std::move(cls));
        continue;
      }
      fail("expected class or harness, found '" + peek().text + "'");
    }
    if (!given_params.empty() || !given_preds.empty()) fail("given clause not followed by a class");
    return prog;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool peek_is(const std::string& text, size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind != Token::Kind::End && t.kind != Token::Kind::Int && t.text == text;
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(peek().loc, msg); }
  const Token& expect(const std::string& text) {
    if (!peek_is(text)) fail("expected '" + text + "', found '" + describe(peek()) + "'");
    return next();
  }
  bool accept(const std::string& text) {
    if (peek_is(text)) {
      next();
      return true;
    }
    return false;
  }
  static std::string describe(const Token& t) { return t.kind == Token::Kind::End ? "end of input" : t.text; }
  std::string expect_ident() {
    if (peek().kind != Token::Kind::Ident) fail("expected identifier, found '" + describe(peek()) + "'");
    return next().text;
  }
  void require_annotation(const Token& t, const std::string& what) const {
    if (!t.annotation) throw ParseError(t.loc, what + " must appear inside an annotation");
  }
  /// Returns true if `final` was among the skipped modifiers.
  bool skip_modifiers() {
    bool is_final = false;
    while (peek().kind == Token::Kind::Ident && kModifiers.count(peek().text)) {
      if (next().text == "final") is_final = true;
    }
    return is_final;
  }

  Type parse_type() {
    const Token& t = peek();
    auto ty = type_keyword(t.text);
    if (t.kind != Token::Kind::Ident || !ty) fail("expected type, found '" + describe(t) + "'");
    next();
    return *ty;
  }

  // given group (frac -> resource) name; given int x, frac y;
  void parse_given_list(std::vector<Param>& params, std::vector<PredicateDecl>* preds) {
    const Token& kw = expect("given");
    require_annotation(kw, "given clause");
    do {
      bool group = accept("group");
      if (peek_is("(")) {
        SourceLoc loc = next().loc;
        std::vector<Type> arg_types;
        if (!peek_is("->")) {
          do arg_types.push_back(parse_type());
          while (accept(","));
        }
        expect("->");
        expect("resource");
        expect(")");
        PredicateDecl pd;
        pd.loc = loc;
        pd.name = expect_ident();
        pd.group = group;
        pd.abstract = true;
        pd.given = true;
        for (size_t k = 0; k < arg_types.size(); ++k) {
          pd.params.push_back(Param{arg_types[k], "arg" + std::to_string(k), loc});
        }
        if (!preds) throw ParseError(loc, "predicate parameters are only allowed on classes");
        preds->push_back(std::move(pd));
      } else {
        if (group) fail("'group' applies only to predicate parameters");
        Param p;
        p.loc = peek().loc;
        p.type = parse_type();
        p.name = expect_ident();
        params.push_back(std::move(p));
      }
    } while (accept(","));
  }

  void parse_class_given(std::vector<Param>& params, std::vector<PredicateDecl>& preds) {
    parse_given_list(params, &preds);
    accept(";");
  }

  ClassDecl parse_class() {
    ClassDecl cls;
    cls.loc = expect("class").loc;
    cls.name = expect_ident();
    expect("{");
    std::vector<Param> pending_given;
    std::vector<Clause> pending_requires, pending_ensures;
    bool pending = false;
    while (!peek_is("}")) {
      if (at_end()) fail("unterminated class body");
      const Token& t = peek();
      if (t.annotation) {
        if (peek_is("given")) {
          parse_given_list(pending_given, nullptr);
          accept(";");
          pending = true;
          continue;
        }
        if (peek_is("requires") || peek_is("ensures")) {
          bool req = next().text == "requires";
          Clause c;
          c.loc = t.loc;
          c.expr = parse_expr();
          expect(";");
          (req ? pending_requires : pending_ensures).push_back(std::move(c));
          pending = true;
          continue;
        }
        if (pending) fail("method contract must be followed by a method");
        parse_ghost_member(cls);
        continue;
      }
      bool is_final = skip_modifiers();
      if (peek_is("AtomicInteger")) {
        if (pending) fail("method contract must be followed by a method");
        parse_cell_field(cls);
        continue;
      }
      // constructor: ClassName(
      if (peek().text == cls.name && peek_is("(", 1)) {
        MethodDecl m = parse_method_rest(Type::Void, true);
        m.ghost_params = std::move(pending_given);
        m.requires_ = std::move(pending_requires);
        m.ensures = std::move(pending_ensures);
        pending_given.clear();
        pending_requires.clear();
        pending_ensures.clear();
        pending = false;
        cls.methods.push_back(std::move(m));
        continue;
      }
      Type ty = parse_type();
      if (peek_is("(", 1)) {
        MethodDecl m = parse_method_rest(ty, false);
        m.ghost_params = std::move(pending_given);
        m.requires_ = std::move(pending_requires);
        m.ensures = std::move(pending_ensures);
        pending_given.clear();
        pending_requires.clear();
        pending_ensures.clear();
        pending = false;
        cls.methods.push_back(std::move(m));
        continue;
      }
      if (pending) fail("method contract must be followed by a method");
      FieldDecl f;
      f.loc = peek().loc;
      f.type = ty;
      f.is_final = is_final;
      f.name = expect_ident();
      expect(";");
      cls.fields.push_back(std::move(f));
    }
    if (pending) fail("method contract must be followed by a method");
    expect("}");
    return cls;
  }

  void parse_cell_field(ClassDecl& cls) {
    expect("AtomicInteger");
    FieldDecl f;
    f.type = Type::Cell;
    ProtocolRef proto;
    const Token& lt = expect("<");
    require_annotation(lt, "protocol parameters");
    std::vector<std::string> names;
    do names.push_back(expect_ident());
    while (accept(","));
    expect(">");
    if (names.size() != 4 && names.size() != 5) {
      throw ParseError(lt.loc, "atomic cell needs protocol <roles, inv, share, trans[, max]>");
    }
    proto.roles = names[0];
    proto.inv = names[1];
    proto.share = names[2];
    proto.trans = names[3];
    if (names.size() == 5) proto.max = names[4];
    f.protocol = proto;
    f.loc = peek().loc;
    f.name = expect_ident();
    expect(";");
    cls.fields.push_back(std::move(f));
  }

  void parse_ghost_member(ClassDecl& cls) {
    SourceLoc loc = peek().loc;
    if (accept("ghost")) {
      FieldDecl f;
      f.ghost = true;
      f.type = parse_type();
      f.loc = peek().loc;
      f.name = expect_ident();
      expect(";");
      cls.fields.push_back(std::move(f));
      return;
    }
    if (accept("roles")) {
      RoleSetDecl rs;
      rs.loc = loc;
      rs.name = expect_ident();
      expect("=");
      expect("{");
      if (!peek_is("}")) {
        do rs.roles.push_back(expect_ident());
        while (accept(","));
      }
      expect("}");
      expect(";");
      cls.role_sets.push_back(std::move(rs));
      return;
    }
    bool group = accept("group");
    if (accept("resource")) {
      PredicateDecl pd;
      pd.loc = peek().loc;
      pd.group = group;
      pd.name = expect_ident();
      pd.params = parse_params();
      if (accept("=")) {
        pd.body_expr = parse_expr();
      } else {
        pd.abstract = true;
      }
      expect(";");
      cls.predicates.push_back(std::move(pd));
      return;
    }
    if (group) fail("expected 'resource' after 'group'");
    FunctionDecl fd;
    fd.loc = peek().loc;
    fd.return_type = parse_type();
    fd.name = expect_ident();
    fd.params = parse_params();
    if (accept("=")) {
      auto ret = std::make_shared<Stmt>();
      ret->kind = Stmt::Kind::Return;
      ret->loc = peek().loc;
      ret->ghost = true;
      ret->value = parse_expr();
      expect(";");
      fd.body.push_back(ret);
    } else {
      expect("{");
      while (!peek_is("}")) {
        if (at_end()) fail("unterminated function body");
        append_stmt(fd.body, parse_stmt());
      }
      expect("}");
    }
    cls.functions.push_back(std::move(fd));
  }

  std::vector<Param> parse_params() {
    std::vector<Param> ps;
    expect("(");
    if (!peek_is(")")) {
      do {
        Param p;
        p.loc = peek().loc;
        p.type = parse_type();
        p.name = expect_ident();
        ps.push_back(std::move(p));
      } while (accept(","));
    }
    expect(")");
    return ps;
  }

  MethodDecl parse_method_rest(Type ret, bool ctor) {
    MethodDecl m;
    m.loc = peek().loc;
    m.constructor = ctor;
    m.return_type = ret;
    m.name = expect_ident();
    m.params = parse_params();
    expect("{");
    while (!peek_is("}")) {
      if (at_end()) fail("unterminated method body");
      append_stmt(m.body, parse_stmt());
    }
    m.end_loc = expect("}").loc;
    return m;
  }

  static void append_stmt(std::vector<StmtPtr>& out, StmtPtr s) {
    if (s->kind == Stmt::Kind::Block && s->name == "#decls") {
      for (auto& d : s->body) out.push_back(d);
    } else {
      out.push_back(std::move(s));
    }
  }

  static std::vector<StmtPtr> branch_body(StmtPtr s) {
    if (s->kind == Stmt::Kind::Block) return s->body;
    return {std::move(s)};
  }

  StmtPtr new_stmt(Stmt::Kind k, const Token& first) {
    auto s = std::make_shared<Stmt>();
    s->kind = k;
    s->loc = first.loc;
    s->ghost = first.annotation;
    return s;
  }

  StmtPtr parse_stmt() {
    const Token& t = peek();
    if (peek_is("{")) {
      auto s = new_stmt(Stmt::Kind::Block, next());
      while (!peek_is("}")) {
        if (at_end()) fail("unterminated block");
        append_stmt(s->body, parse_stmt());
      }
      expect("}");
      return s;
    }
    if (peek_is("if")) {
      auto s = new_stmt(Stmt::Kind::If, next());
      expect("(");
      s->cond = parse_expr();
      expect(")");
      s->body = branch_body(parse_stmt());
      if (accept("else")) {
        s->has_else = true;
        s->else_body = branch_body(parse_stmt());
      }
      return s;
    }
    if (peek_is("loop_invariant")) {
      std::vector<ExprPtr> invs;
      while (peek_is("loop_invariant")) {
        require_annotation(next(), "loop_invariant");
        invs.push_back(parse_expr());
        expect(";");
      }
      if (!peek_is("while")) fail("loop_invariant must precede a while loop");
      auto s = parse_while();
      s->invariant_exprs.insert(s->invariant_exprs.begin(), invs.begin(), invs.end());
      return s;
    }
    if (peek_is("while")) return parse_while();
    if (peek_is("return")) {
      auto s = new_stmt(Stmt::Kind::Return, next());
      if (!peek_is(";")) s->value = parse_expr();
      expect(";");
      return s;
    }
    if (t.annotation && (peek_is("fold") || peek_is("unfold"))) {
      Stmt::Kind k = peek_is("fold") ? Stmt::Kind::Fold : Stmt::Kind::Unfold;
      auto s = new_stmt(k, next());
      s->value = parse_expr();
      expect(";");
      return s;
    }
    if (t.annotation && peek_is("set") && !peek_is("(", 1) && !peek_is(".", 1)) {
      auto s = new_stmt(Stmt::Kind::GhostSet, next());
      s->target = parse_postfix();
      expect("=");
      s->value = parse_expr();
      expect(";");
      return s;
    }
    if (t.annotation && peek_is("assert")) {
      auto s = new_stmt(Stmt::Kind::Assert, next());
      s->value = parse_expr();
      expect(";");
      return s;
    }
    if (peek_is("ghost")) {
      require_annotation(t, "ghost declaration");
      const Token& first = next();
      auto s = new_stmt(Stmt::Kind::LocalDecl, first);
      s->ghost = true;
      s->decl_type = parse_type();
      s->name = expect_ident();
      if (accept("=")) s->value = parse_expr();
      expect(";");
      return s;
    }
    for (const char* kw : {"requires", "ensures", "given", "with"}) {
      if (peek_is(kw)) fail(std::string("unexpected '") + kw + "' in method body");
    }
    if (t.kind == Token::Kind::Ident && type_keyword(t.text) && peek(1).kind == Token::Kind::Ident) {
      const Token& first = next();
      Type ty = *type_keyword(first.text);
      auto block = new_stmt(Stmt::Kind::Block, first);
      do {
        auto s = new_stmt(Stmt::Kind::LocalDecl, first);
        s->decl_type = ty;
        s->loc = peek().loc;
        s->name = expect_ident();
        if (accept("=")) s->value = parse_expr();
        block->body.push_back(s);
      } while (accept(","));
      expect(";");
      if (block->body.size() == 1) return block->body.front();
      // multi-declaration: flattened by the caller's block semantics
      block->name = "#decls";
      return block;
    }
    const Token& first = peek();
    ExprPtr e = parse_expr();
    if (accept("=")) {
      auto s = new_stmt(Stmt::Kind::Assign, first);
      s->target = e;
      s->value = parse_expr();
      expect(";");
      return s;
    }
    auto s = new_stmt(Stmt::Kind::ExprStmt, first);
    s->value = e;
    expect(";");
    return s;
  }

  StmtPtr parse_while() {
    auto s = new_stmt(Stmt::Kind::While, expect("while"));
    expect("(");
    s->cond = parse_expr();
    expect(")");
    while (peek_is("loop_invariant")) {
      require_annotation(next(), "loop_invariant");
      s->invariant_exprs.push_back(parse_expr());
      expect(";");
    }
    s->body = branch_body(parse_stmt());
    if (s->invariant_exprs.empty()) throw ParseError(s->loc, "missing loop invariant");
    return s;
  }

  // ---- expressions ----

  ExprPtr parse_expr() { return parse_implies(); }

  ExprPtr parse_implies() {
    ExprPtr lhs = parse_star();
    if (peek_is("==>")) {
      SourceLoc loc = next().loc;
      ExprPtr rhs = parse_implies();
      return make_binary("==>", lhs, rhs, loc);
    }
    return lhs;
  }

  ExprPtr parse_star() {
    ExprPtr lhs = parse_ternary();
    while (peek_is("**")) {
      SourceLoc loc = next().loc;
      lhs = make_binary("**", lhs, parse_ternary(), loc);
    }
    return lhs;
  }

  ExprPtr parse_ternary() {
    ExprPtr c = parse_or();
    if (peek_is("?")) {
      SourceLoc loc = next().loc;
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Ternary;
      e->loc = loc;
      ExprPtr a = parse_ternary();
      expect(":");
      ExprPtr b = parse_ternary();
      e->args = {c, a, b};
      return e;
    }
    return c;
  }

  template <typename Next>
  ExprPtr parse_left(std::initializer_list<const char*> ops, Next next_level) {
    ExprPtr lhs = (this->*next_level)();
    for (;;) {
      bool hit = false;
      for (const char* op : ops) {
        if (peek_is(op)) {
          SourceLoc loc = next().loc;
          lhs = make_binary(op, lhs, (this->*next_level)(), loc);
          hit = true;
          break;
        }
      }
      if (!hit) return lhs;
    }
  }

  ExprPtr parse_or() { return parse_left({"||"}, &Parser::parse_and); }
  ExprPtr parse_and() { return parse_left({"&&"}, &Parser::parse_eq); }
  ExprPtr parse_eq() { return parse_left({"==", "!="}, &Parser::parse_rel); }
  ExprPtr parse_rel() { return parse_left({"<=", ">=", "<", ">"}, &Parser::parse_add); }
  ExprPtr parse_add() { return parse_left({"+", "-"}, &Parser::parse_mul); }
  ExprPtr parse_mul() { return parse_left({"*", "/", "%"}, &Parser::parse_unary); }

  ExprPtr parse_unary() {
    if (peek_is("!") || peek_is("-")) {
      const Token& t = next();
      std::string op = t.text;
      return make_unary(op, parse_unary(), t.loc);
    }
    return parse_postfix();
  }

  std::vector<ExprPtr> parse_args() {
    std::vector<ExprPtr> args;
    expect("(");
    if (!peek_is(")")) {
      do args.push_back(parse_expr());
      while (accept(","));
    }
    expect(")");
    return args;
  }

  void parse_with(Expr& e) {
    if (!peek_is("with")) return;
    require_annotation(next(), "with clause");
    expect("{");
    if (!peek_is("}")) {
      do {
        WithArg w;
        w.name = expect_ident();
        expect("=");
        w.value = parse_ternary();
        e.with.push_back(std::move(w));
      } while (accept(","));
    }
    expect("}");
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (peek_is(".")) {
      next();
      auto m = std::make_shared<Expr>();
      m->loc = peek().loc;
      m->name = expect_ident();
      m->receiver = e;
      if (peek_is("(")) {
        m->kind = Expr::Kind::Call;
        m->args = parse_args();
      } else {
        m->kind = Expr::Kind::FieldAccess;
      }
      e = m;
    }
    if (e->kind == Expr::Kind::Call || e->kind == Expr::Kind::New) parse_with(*e);
    return e;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Int) {
      next();
      return make_int(BigInt(t.text), t.loc);
    }
    if (peek_is("(")) {
      next();
      if (peek_is("\\forall*")) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::ForallStar;
        e->loc = next().loc;
        e->binder_type = parse_type();
        e->name = expect_ident();
        expect(";");
        ExprPtr range = parse_expr();
        expect(";");
        ExprPtr body = parse_expr();
        expect(")");
        e->args = {range, body};
        return e;
      }
      ExprPtr e = parse_expr();
      expect(")");
      return e;
    }
    if (peek_is("?")) {
      next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Existential;
      e->loc = t.loc;
      e->name = expect_ident();
      return e;
    }
    if (t.kind != Token::Kind::Ident) fail("expected expression, found '" + describe(t) + "'");
    next();
    if (t.text == "true" || t.text == "false") return make_bool(t.text == "true", t.loc);
    if (t.text == "_") {
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Wildcard;
      e->loc = t.loc;
      return e;
    }
    if (t.text == "\\result") {
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Result;
      e->loc = t.loc;
      return e;
    }
    if (t.text == "this") {
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::This;
      e->loc = t.loc;
      return e;
    }
    if (t.text == "new") {
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::New;
      e->loc = t.loc;
      e->name = expect_ident();
      if (peek_is("<")) {
        // protocol arguments repeat the field declaration; ignored
        next();
        while (!peek_is(">")) {
          if (at_end()) fail("unterminated type arguments");
          next();
        }
        next();
      }
      e->args = parse_args();
      return e;
    }
    if (t.text.front() == '\\') fail("unknown specification keyword '" + t.text + "'");
    if (peek_is("(")) {
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Call;
      e->loc = t.loc;
      e->name = t.text;
      e->args = parse_args();
      return e;
    }
    return make_var(t.text, t.loc);
  }

  // ---- harness ----

  Harness parse_harness() {
    Harness h;
    const Token& kw = expect("harness");
    require_annotation(kw, "harness");
    h.loc = kw.loc;
    h.name = expect_ident();
    expect("for");
    h.class_name = expect_ident();
    expect("{");
    expect("new");
    if (expect_ident() != h.class_name) fail("harness must construct its class");
    h.ctor_args = parse_args();
    if (peek_is("with")) {
      Expr tmp;
      parse_with(tmp);
      h.ctor_with = std::move(tmp.with);
    }
    expect(";");
    while (peek_is("thread")) {
      HarnessThread th;
      th.loc = next().loc;
      th.role = expect_ident();
      if (accept("holds")) {
        do {
          std::string cell = expect_ident();
          th.holdings.emplace_back(cell, parse_ternary());
        } while (accept(","));
      }
      expect("{");
      while (!peek_is("}")) {
        if (at_end()) fail("unterminated thread body");
        HarnessAction a;
        a.loc = peek().loc;
        if (accept("read")) {
          a.kind = HarnessAction::Kind::Read;
          a.name = expect_ident();
        } else if (accept("write")) {
          a.kind = HarnessAction::Kind::Write;
          a.name = expect_ident();
        } else {
          a.kind = HarnessAction::Kind::Call;
          a.name = expect_ident();
          a.args = parse_args();
          if (peek_is("with")) {
            Expr tmp;
            parse_with(tmp);
          }
        }
        expect(";");
        th.actions.push_back(std::move(a));
      }
      expect("}");
      h.threads.push_back(std::move(th));
    }
    expect("}");
    return h;
  }
};

}  // namespace

namespace detail {

Program parse_syntax(std::string_view source) {
  Parser p(lex(source));
  return p.parse_program();
}

}  // namespace detail

}  // namespace svl
