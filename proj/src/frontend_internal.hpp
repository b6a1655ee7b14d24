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

#ifndef SVL_FRONTEND_INTERNAL_HPP_
#define SVL_FRONTEND_INTERNAL_HPP_

#include <map>
#include <string>
#include <string_view>

#include "svl/ast.hpp"

namespace svl::detail {

Program parse_syntax(std::string_view source);
void resolve(Program& program);

/// Copy of `e` with variables whose names appear in `subst` replaced.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& subst);

}  // namespace svl::detail

#endif  // SVL_FRONTEND_INTERNAL_HPP_
