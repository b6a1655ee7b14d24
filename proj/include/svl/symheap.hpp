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

#ifndef SVL_SYMHEAP_HPP_
#define SVL_SYMHEAP_HPP_

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svl/ast.hpp"
#include "svl/solver.hpp"
#include "svl/term.hpp"

namespace svl {

/// Receiver of chunks owned by the object itself (fields, class predicates).
inline constexpr const char* kThis = "this";

struct Chunk {
  enum class Kind { PointsTo, Pred };
  Kind kind = Kind::Pred;
  std::string receiver;
  std::string name;        // field or predicate name
  std::vector<Term> args;  // Pred only; excludes the scale
  Term perm;               // permission (PointsTo) or scale (Pred)
  Term value;              // PointsTo only

  std::string to_string() const;
  friend bool operator==(const Chunk&, const Chunk&) = default;
};

class SymbolicHeap {
 public:
  std::vector<Chunk> chunks;
  std::vector<Formula> facts;
  SortMap sorts;
  int fresh_counter = 0;
  int role_count = 1;
  bool inconsistent = false;

  /// Fresh symbol named `hint#k`; domain facts for its sort are assumed.
  Term fresh(const std::string& hint, Sort sort);
  /// Named symbol (parameters, final fields); domain facts as for fresh.
  Term declare(const std::string& name, Sort sort);

  void assume(const Formula& f);
  bool proves(const Formula& f) const;
  /// True unless the facts refute f.
  bool possible(const Formula& f) const;
  bool provably_zero(const Term& t) const;
  bool provably_equal(const Term& a, const Term& b) const;

  /// Merges chunks with identical keys and drops zero permissions.
  void normalize();

  /// Stable rendering, one chunk per line then the pure facts.
  std::string render() const;
};

/// Multiset equality of chunks up to provable equality of terms under `h`.
bool chunks_equivalent(const SymbolicHeap& h, std::vector<Chunk> a, std::vector<Chunk> b);

/// Bindings for specification variables.
struct Env {
  std::map<std::string, Term> vars;
  std::map<std::string, Term> fields;  // final field values
};

struct Failure {
  SourceLoc loc;
  std::string conjunct;
  std::string reason;
  std::vector<std::string> candidates;
};

/// One execution branch: heap, bindings and failures recorded so far.
struct Outcome {
  SymbolicHeap heap;
  Env env;
  std::vector<Failure> failures;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(SourceLoc loc, const std::string& msg) : std::runtime_error(msg), loc(loc) {}
  SourceLoc loc;
};

class UnboundedIteration : public EvalError {
 public:
  using EvalError::EvalError;
};

class EntailmentFailure : public std::runtime_error {
 public:
  explicit EntailmentFailure(Failure f) : std::runtime_error(f.conjunct + ": " + f.reason), failure(std::move(f)) {}
  Failure failure;
};

template <class T>
struct Alt {
  SymbolicHeap heap;
  T value;
};

/// Sort of values of the given type.
Sort sort_of(Type t);

/**
 * Produce, consume, fold and unfold over symbolic heaps for one class.
 *
 * Every operation returns the list of branches it splits into; guards
 * that the pure facts cannot decide are explored both ways. Failed
 * conjuncts are appended to the branch's failures and execution continues
 * as if the resource had been available.
 */
class HeapOps {
 public:
  explicit HeapOps(const ClassDecl& cls, int backtrack_limit = 32);

  const ClassDecl& cls() const { return cls_; }

  std::vector<Alt<Term>> eval_term(const Expr& e, const SymbolicHeap& h, const Env& env) const;
  std::vector<Alt<Formula>> eval_formula(const Expr& e, const SymbolicHeap& h, const Env& env) const;

  /// Splits on `g`; each branch carries whether g holds on it.
  std::vector<Alt<bool>> fork(const SymbolicHeap& h, const Formula& g) const;

  std::vector<Outcome> produce(Outcome o, const Resource& r) const;
  std::vector<Outcome> consume(Outcome o, const Resource& r) const;
  std::vector<Outcome> fold(Outcome o, const Resource& instance) const;
  std::vector<Outcome> unfold(Outcome o, const Resource& instance) const;

  /// Chunk-level primitives used by the built-in cell contract.
  void add_chunk(SymbolicHeap& h, Chunk c) const;
  /// Removes `scale` of the predicate chunk; args set to nullopt match anything.
  std::vector<Outcome> consume_pred(Outcome o, const std::string& receiver, const std::string& name,
                                    const std::vector<std::optional<Term>>& args, const Term& scale,
                                    SourceLoc loc) const;

  bool is_group(const std::string& pred) const;

 private:
  using Cont = std::function<std::vector<Outcome>(Outcome)>;

  std::vector<Outcome> consume_k(Outcome o, const Resource& r, const Cont& k) const;
  std::vector<Outcome> consume_pred_k(Outcome o, const std::string& receiver, const std::string& name,
                                      const std::vector<std::optional<Term>>& args,
                                      const std::vector<std::string>& binders, const Term& scale,
                                      SourceLoc loc, const std::string& text, const Cont& k) const;
  std::vector<Outcome> produce_all(std::vector<Outcome> os, const Resource& r) const;

  struct Instance {
    std::string receiver;
    std::string name;
    std::vector<std::optional<Term>> args;
    std::vector<std::string> binders;  // unbound existentials, per arg ("" if none)
    Term scale;
  };
  std::vector<Alt<Instance>> eval_instance(const Resource& r, const SymbolicHeap& h, const Env& env) const;
  Env body_env(const PredicateDecl& pd, const Instance& inst, const Env& outer) const;
  Term field_value(const std::string& field, const SymbolicHeap& h, SourceLoc loc) const;

  const ClassDecl& cls_;
  int backtrack_limit_;
};

}  // namespace svl

#endif  // SVL_SYMHEAP_HPP_
