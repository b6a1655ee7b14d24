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

// svl: verify, explore and syntax-check SVL files.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svl/engine.hpp"
#include "svl/frontend.hpp"
#include "svl/oracle.hpp"
#include "svl/report.hpp"

namespace {

enum Exit { kOk = 0, kFail = 1, kInput = 2, kInternal = 3 };

struct Options {
  std::vector<std::string> files;
  bool json = false;
  bool obligations = false;
  bool verbose = false;
  bool strict_bounds = false;
  std::string harness;
  std::optional<std::vector<size_t>> replay;
  svl::OracleBounds bounds;
};

struct Loaded {
  svl::Program program;
  std::vector<svl::Diagnostic> diagnostics;
  std::string error;  // unreadable file
};

Loaded load(const std::string& path) {
  Loaded l;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    l.error = "cannot read " + path;
    return l;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    l.program = svl::parse(ss.str());
    l.diagnostics = svl::wellformed(l.program);
  } catch (const svl::ParseError& e) {
    l.diagnostics.push_back({e.loc(), e.message()});
  }
  return l;
}

/// Reports load problems; returns the exit code for the file, or kOk.
int input_errors(const std::string& path, const Loaded& l, nlohmann::json& file, std::ostream& text) {
  if (!l.error.empty()) {
    file["status"] = "error";
    file["diagnostics"] = nlohmann::json::array({{{"loc", nullptr}, {"message", l.error}}});
    text << path << ": error: " << l.error << "\n";
    return kInput;
  }
  nlohmann::json diags = nlohmann::json::array();
  for (const auto& d : l.diagnostics) {
    diags.push_back(svl::diagnostic_to_json(d));
    text << path << ":" << d.loc.line << ":" << d.loc.col << ": error: " << d.message << "\n";
  }
  file["diagnostics"] = diags;
  if (!l.diagnostics.empty()) {
    file["status"] = "error";
    return kInput;
  }
  return kOk;
}

int verify_file(const std::string& path, const Options& o, nlohmann::json& file, std::ostream& text) {
  Loaded l = load(path);
  if (int rc = input_errors(path, l, file, text)) return rc;
  auto start = std::chrono::steady_clock::now();
  svl::Report r = svl::verify_program(l.program);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  file["status"] = svl::verdict_name(r.verdict);
  file["report"] = svl::report_to_json(r);
  text << path << ": " << svl::report_summary(r);
  if (o.verbose) text << " (" << std::fixed << std::setprecision(3) << seconds << " s)";
  text << "\n";
  for (const auto& m : r.methods) {
    for (const auto& ob : m.obligations) {
      if (o.obligations || ob.verdict == svl::Verdict::Fail) text << svl::obligation_line(m, ob) << "\n";
    }
    if (o.verbose) {
      for (const auto& w : m.warnings) text << "  warning " << m.name << ": " << w << "\n";
    }
  }
  return r.failed() ? kFail : kOk;
}

int oracle_file(const std::string& path, const Options& o, nlohmann::json& file, std::ostream& text) {
  Loaded l = load(path);
  if (int rc = input_errors(path, l, file, text)) return rc;
  int rc = kOk;
  nlohmann::json runs = nlohmann::json::array();
  size_t matched = 0;
  for (const auto& h : l.program.harnesses) {
    if (!o.harness.empty() && h.name != o.harness) continue;
    ++matched;
    auto start = std::chrono::steady_clock::now();
    svl::Exploration e;
    std::optional<svl::Trace> trace;
    if (o.replay) {
      try {
        trace = svl::replay(l.program, h, *o.replay, o.bounds);
      } catch (const svl::ScheduleInfeasible& ex) {
        text << path << ": harness " << h.name << ": infeasible schedule: " << ex.what() << "\n";
        file["status"] = "error";
        file["harnesses"] = runs;
        return kInput;
      }
      e.harness = h.name;
      e.schedule = *o.replay;
      e.states = trace->steps.size();
      e.transitions = trace->steps.size() - 1;
      e.violation = trace->violation;
      e.verdict = e.violation ? svl::OracleVerdict::Violation : svl::OracleVerdict::Clean;
    } else {
      e = svl::explore(l.program, h, o.bounds);
      if (e.violation) trace = svl::replay(l.program, h, e.schedule, o.bounds);
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    runs.push_back(svl::exploration_to_json(e, trace ? &*trace : nullptr));
    text << path << ": harness " << h.name << ": " << svl::oracle_verdict_name(e.verdict) << " (" << e.states
         << " states, " << e.transitions << " transitions, " << e.pruned << " threads stopped at loop cap "
         << o.bounds.loop_cap;
    if (o.verbose) text << ", " << std::fixed << std::setprecision(3) << seconds << " s";
    text << ")\n";
    if (e.violation) {
      const auto& v = *e.violation;
      text << "  " << v.kind << " at " << v.loc.to_string() << ": " << v.message << "\n  schedule:";
      for (size_t t : e.schedule) text << " t" << t;
      text << "\n";
      for (const auto& s : trace->steps) text << "    " << s.text << " | " << svl::ledger_to_string(s.ledger) << "\n";
      rc = std::max(rc, static_cast<int>(kFail));
    } else if (trace) {
      for (const auto& s : trace->steps) text << "    " << s.text << " | " << svl::ledger_to_string(s.ledger) << "\n";
    } else if (e.verdict == svl::OracleVerdict::BoundExceeded && o.strict_bounds) {
      rc = std::max(rc, static_cast<int>(kInternal));
    }
  }
  if (!o.harness.empty() && matched == 0) {
    text << path << ": error: no harness named " << o.harness << "\n";
    file["status"] = "error";
    file["harnesses"] = runs;
    return kInput;
  }
  if (matched == 0) text << path << ": no harness\n";
  file["harnesses"] = runs;
  file["status"] = rc == kFail ? "violation" : rc == kInternal ? "bound-exceeded" : "clean";
  return rc;
}

int check_file(const std::string& path, const Options&, nlohmann::json& file, std::ostream& text) {
  Loaded l = load(path);
  if (int rc = input_errors(path, l, file, text)) return rc;
  file["status"] = "ok";
  file["classes"] = l.program.classes.size();
  file["harnesses"] = l.program.harnesses.size();
  text << path << ": ok\n";
  return kOk;
}

using Runner = int (*)(const std::string&, const Options&, nlohmann::json&, std::ostream&);

int run(const std::string& command, Runner runner, const Options& o) {
  nlohmann::json files = nlohmann::json::array();
  std::ostringstream text;
  int rc = kOk;
  for (const auto& path : o.files) {
    nlohmann::json file = {{"path", path}};
    int code;
    try {
      code = runner(path, o, file, text);
    } catch (const std::exception& e) {
      file["status"] = "internal-error";
      file["error"] = e.what();
      text << path << ": internal error: " << e.what() << "\n";
      code = kInternal;
    }
    rc = std::max(rc, code);
    files.push_back(std::move(file));
  }
  if (o.json) {
    nlohmann::json out = {{"command", command}, {"exit_code", rc}, {"files", std::move(files)}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << text.str();
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifier and interleaving oracle for SVL synchroniser programs", "svl"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("files", o.files, "SVL input files")->required()->check(CLI::ExistingFile);
    sub->add_flag("--json", o.json, "Write a structured JSON report to stdout");
    sub->add_flag("--verbose", o.verbose, "Print timing and warnings");
  };
  CLI::App* verify = app.add_subcommand("verify", "Verify every method against its contract");
  common(verify);
  verify->add_flag("--obligations", o.obligations, "List every obligation, not only failed ones");

  CLI::App* oracle = app.add_subcommand("oracle", "Explore all interleavings of the harnesses");
  common(oracle);
  oracle->add_option("--harness", o.harness, "Only run the named harness");
  oracle->add_option("--max-steps", o.bounds.max_steps, "Longest schedule explored")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle->add_option("--max-states", o.bounds.max_states, "Distinct states before giving up")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle->add_option("--loop-cap", o.bounds.loop_cap, "Loop iterations per loop execution")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle->add_flag("--strict-bounds", o.strict_bounds, "Exit 3 when a bound is exceeded");
  oracle
      ->add_option("--replay", o.replay, "Replay one schedule of thread indices (e.g. 0,0,1) instead of exploring")
      ->delimiter(',')
      ->needs("--harness");

  CLI::App* check = app.add_subcommand("check-syntax", "Parse and check well-formedness only");
  common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kInput;
  }

  if (verify->parsed()) return run("verify", verify_file, o);
  if (oracle->parsed()) return run("oracle", oracle_file, o);
  return run("check-syntax", check_file, o);
}
