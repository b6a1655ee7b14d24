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

#ifndef SVL_SOLVER_HPP_
#define SVL_SOLVER_HPP_

#include <vector>

#include "svl/term.hpp"

namespace svl {

/**
 * Decision procedure for the pure fragment: linear arithmetic over
 * integers and rationals, with nonlinear monomials treated as opaque
 * atoms. Works by case analysis over disjunctions, Fourier-Motzkin
 * elimination with integer tightening, and bounded case splits on
 * small-range integer symbols that occur in nonlinear monomials.
 *
 * Answers are conservative: `entails` may return false for a valid
 * entailment outside the fragment, never true for an invalid one.
 */
struct SolverLimits {
  int max_leaves = 20000;
  int max_constraints = 4000;
  int split_range = 16;
  int split_depth = 2;
};

bool entails(const std::vector<Formula>& facts, const Formula& goal, const SortMap& sorts,
             const SolverLimits& limits = {});

/// False only when the facts are provably contradictory.
bool satisfiable(const std::vector<Formula>& facts, const SortMap& sorts, const SolverLimits& limits = {});

}  // namespace svl

#endif  // SVL_SOLVER_HPP_
