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

#include "svl/report.hpp"

namespace svl {

namespace {

nlohmann::json loc_json(SourceLoc loc) { return {{"line", loc.line}, {"col", loc.col}}; }

nlohmann::json ledger_json(const std::vector<LedgerRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"cell", r.cell}, {"holder", r.holder}, {"amount", rational_to_string(r.amount)}});
  }
  return out;
}

}  // namespace

nlohmann::json report_to_json(const Report& r) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : r.methods) {
    nlohmann::json obligations = nlohmann::json::array();
    for (const auto& o : m.obligations) {
      nlohmann::json j = {{"loc", loc_json(o.loc)},         {"kind", o.kind},
                          {"tag", o.tag},                   {"description", o.description},
                          {"verdict", verdict_name(o.verdict)}, {"detail", o.detail}};
      if (o.transfer) j["transfer"] = {{"consumed", o.transfer->consumed}, {"produced", o.transfer->produced}};
      obligations.push_back(std::move(j));
    }
    methods.push_back({{"class", m.class_name},
                       {"method", m.name},
                       {"constructor", m.constructor},
                       {"loc", loc_json(m.loc)},
                       {"verdict", verdict_name(m.verdict)},
                       {"failed", m.failed()},
                       {"warnings", m.warnings},
                       {"obligations", std::move(obligations)}});
  }
  return {{"verdict", verdict_name(r.verdict)},
          {"methods", std::move(methods)},
          {"obligation_count", r.obligation_count()},
          {"failed", r.failed()}};
}

nlohmann::json diagnostic_to_json(const Diagnostic& d) { return {{"loc", loc_json(d.loc)}, {"message", d.message}}; }

nlohmann::json exploration_to_json(const Exploration& e, const Trace* trace) {
  nlohmann::json j = {{"harness", e.harness},
                      {"verdict", oracle_verdict_name(e.verdict)},
                      {"states", e.states},
                      {"transitions", e.transitions},
                      {"pruned", e.pruned},
                      {"schedule", e.schedule}};
  if (e.violation) {
    const Violation& v = *e.violation;
    j["violation"] = {{"kind", v.kind},
                      {"thread", v.thread ? nlohmann::json(*v.thread) : nlohmann::json(nullptr)},
                      {"loc", loc_json(v.loc)},
                      {"message", v.message},
                      {"ledger", ledger_json(v.ledger)}};
  }
  if (trace) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : trace->steps) {
      steps.push_back({{"thread", s.thread ? nlohmann::json(*s.thread) : nlohmann::json(nullptr)},
                       {"text", s.text},
                       {"ledger", ledger_json(s.ledger)}});
    }
    j["trace"] = std::move(steps);
  }
  return j;
}

std::string report_summary(const Report& r) {
  std::string s = std::to_string(r.methods.size()) + (r.methods.size() == 1 ? " method, " : " methods, ") +
                  std::to_string(r.obligation_count()) + " obligations, ";
  size_t failed = r.failed();
  if (failed == 0) return s + "all passed";
  s += std::to_string(failed) + " failed in";
  bool first = true;
  for (const auto& m : r.methods) {
    if (m.verdict == Verdict::Pass) continue;
    s += (first ? " " : ", ") + m.name;
    first = false;
  }
  return s;
}

std::string obligation_line(const MethodReport& m, const Obligation& o) {
  std::string s = "  " + verdict_name(o.verdict) + " " + o.loc.to_string() + " " + o.kind;
  s += " " + m.name + ": " + o.description;
  if (!o.detail.empty()) s += " -- " + o.detail;
  if (o.transfer) {
    auto join = [](const std::set<std::string>& xs) {
      std::string out;
      for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
      return out;
    };
    s += " (consumes inv(" + join(o.transfer->consumed) + "), produces inv(" + join(o.transfer->produced) + "))";
  }
  return s;
}

}  // namespace svl
