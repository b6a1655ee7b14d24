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

#ifndef SVL_AST_HPP_
#define SVL_AST_HPP_

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svl/fraction.hpp"

namespace svl {

struct SourceLoc {
  int line = 0;
  int col = 0;

  std::string to_string() const { return std::to_string(line) + ":" + std::to_string(col); }
  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceLoc loc, const std::string& msg)
      : std::runtime_error(loc.to_string() + ": " + msg), loc_(loc), message_(msg) {}
  SourceLoc loc() const { return loc_; }
  const std::string& message() const { return message_; }

 private:
  SourceLoc loc_;
  std::string message_;
};

/// Undeclared or duplicate names.
class ResolveError : public ParseError {
 public:
  using ParseError::ParseError;
};

enum class Type { Int, Bool, Frac, Role, Resource, Void, Cell, Unknown };

std::string type_name(Type t);

/// What a name refers to, filled in by resolution.
enum class Binding {
  Unresolved,
  Local,        // local variable, value or ghost
  Param,        // method value parameter
  GhostParam,   // method `given` parameter
  Field,        // regular heap field of `this`
  FinalField,   // final field: immutable after construction, no permission needed
  GhostField,   // ghost field of `this`
  CellField,    // atomic-cell field of `this`
  Role,         // role constant
  Result,       // \result
  Existential,  // ?x in a postcondition
  Binder,       // \forall* binder
  FuncParam,    // parameter of a pure function
  PredParam,    // parameter of a predicate body
  This,
};

/// Resolved meaning of a Call expression.
enum class CallKind {
  None,
  Function,   // pure function of the class
  Method,     // method of the class
  Predicate,  // predicate instance (resource position)
  Handle,     // built-in cell.handle(r, d, p)
  CellGet,
  CellSet,
  CellCas,
  PointsTo,
  Perm,
};

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct WithArg {
  std::string name;
  ExprPtr value;
};

/**
 * Untyped expression tree shared by program code and annotations. Resource
 * syntax (`**`, predicate instances, PointsTo/Perm) is parsed into this tree
 * and classified into Resource nodes during resolution.
 */
struct Expr {
  enum class Kind {
    IntLit,
    BoolLit,
    Var,
    Result,
    This,
    Unary,        // op in `op`, operand args[0]
    Binary,       // op in `op`, args[0], args[1]
    Ternary,      // args = {cond, then, else}
    Call,         // [receiver.]name(args) [with {...}]
    FieldAccess,  // receiver.name
    New,          // new name(args) [with {...}]
    Existential,  // ?name
    Wildcard,     // _
    ForallStar,   // (\forall* type name; args[0]; args[1])
  };

  Kind kind = Kind::IntLit;
  SourceLoc loc;
  std::string name;
  std::string op;
  BigInt int_value;
  bool bool_value = false;
  std::vector<ExprPtr> args;
  ExprPtr receiver;
  std::vector<WithArg> with;
  Type binder_type = Type::Int;

  Binding binding = Binding::Unresolved;
  CallKind call = CallKind::None;
  Type type = Type::Unknown;
};

ExprPtr make_int(BigInt v, SourceLoc loc = {});
ExprPtr make_bool(bool v, SourceLoc loc = {});
ExprPtr make_var(std::string name, SourceLoc loc = {});
ExprPtr make_binary(std::string op, ExprPtr a, ExprPtr b, SourceLoc loc = {});
ExprPtr make_unary(std::string op, ExprPtr a, SourceLoc loc = {});

struct Resource;
using ResourcePtr = std::shared_ptr<const Resource>;

/// Resolved specification formula.
struct Resource {
  enum class Kind { Emp, Pure, PointsTo, Pred, Star, Implies, IterStar };

  Kind kind = Kind::Emp;
  SourceLoc loc;

  // Pure: the boolean; Implies: guard; IterStar: range condition.
  ExprPtr cond;

  // PointsTo: receiver.field with permission and value pattern.
  // Pred: receiver.name(args). For group predicates the last argument
  // is the scale.
  ExprPtr receiver;
  std::string name;
  ExprPtr perm;
  ExprPtr value;
  std::vector<ExprPtr> args;

  // IterStar binder.
  std::string binder;

  // Star: left ** right; Implies / IterStar: body in right.
  ResourcePtr left;
  ResourcePtr right;
};

ResourcePtr make_emp();
ResourcePtr make_star(ResourcePtr a, ResourcePtr b);

struct Stmt;
using StmtPtr = std::shared_ptr<Stmt>;

struct Stmt {
  enum class Kind {
    LocalDecl,  // type name [= value]
    Assign,     // target = value
    ExprStmt,   // value (a call)
    If,
    While,
    Block,
    Return,
    Fold,       // value is the predicate application
    Unfold,
    GhostSet,   // set target = value
    Assert,
  };

  Kind kind = Kind::Block;
  SourceLoc loc;
  bool ghost = false;

  Type decl_type = Type::Unknown;
  std::string name;
  ExprPtr target;
  ExprPtr value;
  ExprPtr cond;
  std::vector<StmtPtr> body;
  std::vector<StmtPtr> else_body;
  bool has_else = false;

  // While: one entry per loop_invariant clause.
  std::vector<ExprPtr> invariant_exprs;
  std::vector<ResourcePtr> invariants;

  // Fold/Unfold: resolved predicate instance.
  ResourcePtr pred;
};

struct Param {
  Type type = Type::Unknown;
  std::string name;
  SourceLoc loc;
};

struct PredicateDecl {
  std::string name;
  std::vector<Param> params;
  bool group = false;
  bool abstract = false;  // no body
  bool given = false;     // class `given` predicate family
  ExprPtr body_expr;
  ResourcePtr body;
  SourceLoc loc;
};

struct FunctionDecl {
  std::string name;
  Type return_type = Type::Unknown;
  std::vector<Param> params;
  std::vector<StmtPtr> body;
  // Single expression equivalent to the body after inlining local
  // declarations; null when the body is not of the pure form.
  ExprPtr expr;
  SourceLoc loc;
};

/// Protocol parameters attached to an atomic cell field.
struct ProtocolRef {
  std::string roles;
  std::string inv;
  std::string share;
  std::string trans;
  std::string max;  // optional state bound (a ghost field or given name)
};

struct FieldDecl {
  std::string name;
  Type type = Type::Unknown;
  bool ghost = false;
  bool is_final = false;
  std::optional<ProtocolRef> protocol;
  SourceLoc loc;
};

struct RoleSetDecl {
  std::string name;
  std::vector<std::string> roles;
  SourceLoc loc;
};

struct Clause {
  ExprPtr expr;
  ResourcePtr res;
  SourceLoc loc;
};

struct MethodDecl {
  std::string name;
  bool constructor = false;
  Type return_type = Type::Void;
  std::vector<Param> params;
  std::vector<Param> ghost_params;
  std::vector<Clause> requires_;
  std::vector<Clause> ensures;
  std::vector<StmtPtr> body;
  SourceLoc loc;
  SourceLoc end_loc;
};

struct ClassDecl {
  std::string name;
  std::vector<Param> ghost_params;         // non-predicate `given` parameters
  std::vector<PredicateDecl> predicates;   // includes `given` predicate families
  std::vector<FunctionDecl> functions;
  std::vector<FieldDecl> fields;
  std::vector<RoleSetDecl> role_sets;
  std::vector<MethodDecl> methods;
  SourceLoc loc;

  const PredicateDecl* find_predicate(const std::string& n) const;
  const FunctionDecl* find_function(const std::string& n) const;
  const FieldDecl* find_field(const std::string& n) const;
  const MethodDecl* find_method(const std::string& n) const;
  const MethodDecl* constructor() const;
  /// Role constants in declaration order; "S" is always first.
  std::vector<std::string> roles() const;
  int role_index(const std::string& n) const;
};

struct HarnessAction {
  enum class Kind { Call, Read, Write };
  Kind kind = Kind::Call;
  std::string name;  // method or cell name
  std::vector<ExprPtr> args;
  SourceLoc loc;
};

struct HarnessThread {
  std::string role;
  std::vector<std::pair<std::string, ExprPtr>> holdings;  // cell -> fraction
  std::vector<HarnessAction> actions;
  SourceLoc loc;
};

/// Concrete thread setup for the interleaving oracle.
struct Harness {
  std::string name;
  std::string class_name;
  std::vector<ExprPtr> ctor_args;
  std::vector<WithArg> ctor_with;
  std::vector<HarnessThread> threads;
  SourceLoc loc;
};

struct Program {
  std::vector<ClassDecl> classes;
  std::vector<Harness> harnesses;

  const ClassDecl* find_class(const std::string& n) const;
};

/// Name of the built-in token predicate carried by atomic cells.
inline constexpr const char* kHandle = "handle";
/// Distinguished synchroniser role.
inline constexpr const char* kSyncRole = "S";

}  // namespace svl

#endif  // SVL_AST_HPP_
