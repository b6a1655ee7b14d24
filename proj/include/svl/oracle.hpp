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

#ifndef SVL_ORACLE_HPP_
#define SVL_ORACLE_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svl/ast.hpp"
#include "svl/fraction.hpp"

namespace svl {

struct OracleBounds {
  size_t max_steps = 1000;     // schedule length
  size_t max_states = 100000;  // distinct states visited
  int loop_cap = 4;            // body iterations per loop execution
};

enum class OracleVerdict { Clean, Violation, BoundExceeded };

std::string oracle_verdict_name(OracleVerdict v);

/// One holder's share of the resource protected by a cell.
struct LedgerRow {
  std::string cell;
  std::string holder;  // "pool", "init" or a thread name "t0", "t1", ...
  Rational amount;
};

struct Violation {
  std::string kind;  // overdraw, read-without-permission, write-without-permission
  std::optional<size_t> thread;
  SourceLoc loc;
  std::string message;
  std::vector<LedgerRow> ledger;
};

struct Exploration {
  std::string harness;
  OracleVerdict verdict = OracleVerdict::Clean;
  size_t states = 0;
  size_t transitions = 0;
  size_t pruned = 0;  // threads stopped at the loop cap
  std::vector<size_t> schedule;  // leads to the violation
  std::optional<Violation> violation;
};

struct TraceStep {
  std::optional<size_t> thread;  // empty for the initial state
  std::string text;
  std::vector<LedgerRow> ledger;
};

struct Trace {
  std::vector<TraceStep> steps;
  std::optional<Violation> violation;
};

/// The schedule picks a thread that is finished, stopped or absent.
class ScheduleInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The harness cannot be executed concretely (unsupported construct,
/// division by zero, unknown method).
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Depth-first enumeration of all interleavings of the harness threads with
 * a permission ledger per atomic cell. Threads interleave only at atomic
 * cell operations and at harness read/write actions; states are
 * deduplicated on their full contents, ledger included.
 */
Exploration explore(const Program& p, const Harness& h, const OracleBounds& bounds = {});

/// Deterministic re-execution of `schedule`, stopping at the first violation.
Trace replay(const Program& p, const Harness& h, const std::vector<size_t>& schedule,
             const OracleBounds& bounds = {});

std::string ledger_to_string(const std::vector<LedgerRow>& rows);

}  // namespace svl

#endif  // SVL_ORACLE_HPP_
