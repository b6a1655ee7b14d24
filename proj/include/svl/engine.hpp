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

#ifndef SVL_ENGINE_HPP_
#define SVL_ENGINE_HPP_

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "svl/ast.hpp"
#include "svl/symheap.hpp"

namespace svl {

enum class Verdict { Pass, Fail };

std::string verdict_name(Verdict v);

/// Invariant scales moved by a compareAndSet, one entry per distinct path value.
struct Transfer {
  std::set<std::string> consumed;
  std::set<std::string> produced;
};

struct Obligation {
  SourceLoc loc;
  std::string kind;  // precondition, postcondition, loop-invariant-entry, ...
  std::string tag;   // distinguishes several checks at one location
  std::string description;
  Verdict verdict = Verdict::Pass;
  std::string detail;
  std::optional<Transfer> transfer;
};

struct MethodReport {
  std::string class_name;
  std::string name;
  bool constructor = false;
  SourceLoc loc;
  std::vector<Obligation> obligations;
  std::vector<std::string> warnings;
  Verdict verdict = Verdict::Pass;

  size_t failed() const;
};

struct Report {
  std::vector<MethodReport> methods;
  Verdict verdict = Verdict::Pass;
  double seconds = 0;

  size_t obligation_count() const;
  size_t failed() const;
};

/// Ghost arguments of an atomic operation.
struct GhostArgs {
  Term r;
  Term d;
  Term p;
};

/// Result of an operation that yields a value on each branch.
struct Valued {
  Outcome o;
  Term value;
};

/**
 * The built-in contract of an atomic cell, parameterised by its protocol.
 * Failures are appended to the outcome; obligations are not recorded here.
 */
class CellContract {
 public:
  /// Called after each contract step with the step's name; the engine uses
  /// it to turn failures into obligations.
  using Checkpoint = std::function<std::vector<Outcome>(std::vector<Outcome>, const std::string& step)>;

  CellContract(const HeapOps& ops, const FieldDecl& cell);

  std::vector<Valued> get(Outcome o, const GhostArgs& g, SourceLoc loc, const std::string& hint = "ret",
                          const Checkpoint& cp = {}) const;
  std::vector<Outcome> set(Outcome o, const Term& n, const GhostArgs& g, SourceLoc loc,
                           const Checkpoint& cp = {}) const;
  /// Invariant scales moved on each branch are added to `transfer` when given.
  std::vector<Valued> cas(Outcome o, const Term& x, const Term& n, const GhostArgs& g, SourceLoc loc,
                          const Checkpoint& cp = {}, Transfer* transfer = nullptr) const;
  std::vector<Outcome> construct(Outcome o, const Term& v, SourceLoc loc, const Checkpoint& cp = {}) const;

  /// share(r, v) on every branch of its guards.
  std::vector<Alt<Term>> share(const SymbolicHeap& h, const Env& env, const Term& r, const Term& v) const;
  std::vector<Alt<Formula>> trans(const SymbolicHeap& h, const Env& env, const Term& r, const Term& c,
                                  const Term& n) const;
  std::optional<Term> bound(const SymbolicHeap& h, const Env& env) const;

  const FieldDecl& cell() const { return cell_; }
  const ProtocolRef& protocol() const { return *cell_.protocol; }

  /// Steps of the contract, in the order obligations are reported.
  std::vector<Outcome> check_trans(Outcome o, const Term& r, const Term& c, const Term& n, SourceLoc loc) const;
  std::vector<Outcome> consume_handle(Outcome o, const Term& r, const Term& d, const Term& p, SourceLoc loc) const;
  std::vector<Outcome> consume_inv(Outcome o, const Term& scale, SourceLoc loc) const;
  void produce_handle(Outcome& o, const Term& r, const Term& d, const Term& p) const;
  void produce_inv(Outcome& o, const Term& scale) const;
  /// a cut-off-minus b on every branch.
  std::vector<Alt<Term>> cutoff(const SymbolicHeap& h, const Term& a, const Term& b) const;

 private:
  const HeapOps& ops_;
  const FieldDecl& cell_;
};

MethodReport exec_method(const Program& p, const ClassDecl& cls, const MethodDecl& m);

Report verify_program(const Program& p);

}  // namespace svl

#endif  // SVL_ENGINE_HPP_
