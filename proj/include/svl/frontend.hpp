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

#ifndef SVL_FRONTEND_HPP_
#define SVL_FRONTEND_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "svl/ast.hpp"

namespace svl {

struct Token {
  enum class Kind { Ident, Int, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  SourceLoc loc;
  bool annotation = false;  // inside /*@ ... @*/
};

/// Splits SVL text into tokens. Annotation delimiters are dropped; tokens
/// between them carry annotation = true.
std::vector<Token> lex(std::string_view source);

/**
 * Parses and resolves an SVL program.
 *
 * Throws ParseError for syntax errors (including loops without a
 * loop_invariant) and ResolveError for undeclared or duplicate names.
 */
Program parse(std::string_view source);

struct Diagnostic {
  SourceLoc loc;
  std::string message;
};

/// Type, arity, purity and ghost-discipline checks. Empty iff well formed.
std::vector<Diagnostic> wellformed(const Program& program);

/// Canonical SVL rendering; parse(pretty_print(p)) is structurally equal to p.
std::string pretty_print(const Program& program);

/// Location-free structural dump used to compare programs.
std::string structural_dump(const Program& program);

std::string expr_to_string(const Expr& e);
std::string resource_to_string(const Resource& r);

}  // namespace svl

#endif  // SVL_FRONTEND_HPP_
