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

#ifndef SVL_REPORT_HPP_
#define SVL_REPORT_HPP_

#include <string>

#include <json.hpp>

#include "svl/engine.hpp"
#include "svl/frontend.hpp"
#include "svl/oracle.hpp"

namespace svl {

/// Methods, obligations and transfers of one verified file. Timing is left
/// out so that repeated runs serialize identically.
nlohmann::json report_to_json(const Report& r);

nlohmann::json diagnostic_to_json(const Diagnostic& d);

/// Exploration result; the trace is the replay of the violating schedule.
nlohmann::json exploration_to_json(const Exploration& e, const Trace* trace);

/// "3 methods, 27 obligations, all passed" or
/// "3 methods, 27 obligations, 2 failed in release".
std::string report_summary(const Report& r);

/// One line per obligation: "  fail 90:21 precondition release: <description> -- <detail>".
std::string obligation_line(const MethodReport& m, const Obligation& o);

}  // namespace svl

#endif  // SVL_REPORT_HPP_
