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

// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <sys/wait.h>

#include <gmpxx.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "svl/fraction.hpp"
#include "svl/frontend.hpp"
#include "svl/symheap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Run {
  int code;
  std::string out;
  double seconds;
};

Run svl_cli(const std::string& args) {
  auto start = Clock::now();
  std::string cmd = std::string(SVL_CLI) + " " + args + " 2>/dev/null";
  Run r{-1, "", 0};
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.seconds = since(start);
  return r;
}

std::string corpus(const std::string& name) { return std::string(SVL_CORPUS_DIR) + "/" + name; }

const std::vector<std::string> kCorpus = {"semaphore.svl", "countdownlatch.svl", "spinlock.svl"};

struct Mutation {
  std::string path;
  int line = 0;
  std::string kind;
  std::string race_harness;  // empty when the mutation encodes no race
};

std::vector<Mutation> mutations() {
  static const std::regex expect(R"(// expect-fail: line (\d+), kind ([a-z-]+))");
  static const std::regex race(R"(// race: yes, harness (\w+))");
  std::vector<Mutation> out;
  for (const auto& e : fs::directory_iterator(corpus("mutations"))) {
    if (e.path().extension() != ".svl") continue;
    Mutation m;
    m.path = e.path().string();
    std::ifstream in(m.path);
    std::string line;
    std::smatch sm;
    for (int i = 0; i < 5 && std::getline(in, line); ++i) {
      if (std::regex_search(line, sm, expect)) {
        m.line = std::stoi(sm[1]);
        m.kind = sm[2];
      }
      if (std::regex_search(line, sm, race)) m.race_harness = sm[1];
    }
    out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const Mutation& a, const Mutation& b) { return a.path < b.path; });
  return out;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json();
  }
}

/// Collects failure reasons; a criterion passes when none were recorded.
struct Criterion {
  std::vector<std::string> problems;
  void require(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

std::string fmt(double s) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << s << " s";
  return os.str();
}

std::string corpus_verdicts(Criterion& c) {
  std::ostringstream detail;
  for (const auto& f : kCorpus) {
    Run r = svl_cli("verify --json " + corpus(f));
    json j = parse_json(r.out);
    c.require(r.code == 0, f + ": exit " + std::to_string(r.code));
    c.require(r.seconds < 5.0, f + ": took " + fmt(r.seconds));
    if (j.is_null()) {
      c.require(false, f + ": unreadable report");
      continue;
    }
    const json& rep = j["files"][0]["report"];
    c.require(rep["failed"] == 0, f + ": failed obligations");
    std::vector<std::string> names;
    for (const auto& m : rep["methods"]) names.push_back(m["method"]);
    detail << f << " " << rep["methods"].size() << " methods " << rep["obligation_count"] << " obligations in "
           << fmt(r.seconds) << "; ";
    if (f == "semaphore.svl") {
      for (const char* want : {"Semaphore", "acquire", "release"})
        c.require(std::find(names.begin(), names.end(), want) != names.end(), f + ": no method " + want);
    }
    if (f == "countdownlatch.svl") {
      for (const char* want : {"countDown", "await"})
        c.require(std::find(names.begin(), names.end(), want) != names.end(), f + ": no method " + want);
    }
  }
  return detail.str();
}

std::string cas_transfers(Criterion& c) {
  Run r = svl_cli("verify --json " + corpus("semaphore.svl"));
  json j = parse_json(r.out);
  if (j.is_null()) {
    c.require(false, "unreadable report");
    return "";
  }
  std::ostringstream detail;
  auto check = [&](const std::string& method, const std::vector<std::string>& consumed,
                   const std::vector<std::string>& produced) {
    int found = 0;
    for (const auto& m : j["files"][0]["report"]["methods"]) {
      if (m["method"] != method) continue;
      for (const auto& o : m["obligations"]) {
        if (!o.contains("transfer") || o["transfer"].is_null()) continue;
        std::string desc = o["description"];
        if (desc.find("compareAndSet") == std::string::npos) continue;
        ++found;
        c.require(o["verdict"] == "pass", method + ": CAS obligation not passed");
        c.require(o["transfer"]["consumed"] == json(consumed), method + ": consumed " + o["transfer"]["consumed"].dump());
        c.require(o["transfer"]["produced"] == json(produced), method + ": produced " + o["transfer"]["produced"].dump());
        detail << method << " consumes inv(" << o["transfer"]["consumed"][0].get<std::string>() << ") produces inv("
               << o["transfer"]["produced"][0].get<std::string>() << "); ";
      }
    }
    c.require(found == 1, method + ": " + std::to_string(found) + " compareAndSet transfers");
  };
  check("acquire", {"0"}, {"1/num"});
  check("release", {"1/num"}, {"0"});
  return detail.str();
}

std::string mutation_suite(Criterion& c) {
  auto ms = mutations();
  c.require(ms.size() >= 10, "only " + std::to_string(ms.size()) + " mutations");
  for (const auto& m : ms) {
    std::string name = fs::path(m.path).filename().string();
    if (m.line == 0) {
      c.require(false, name + ": no expect-fail header");
      continue;
    }
    Run r = svl_cli("verify --json " + m.path);
    c.require(r.code == 1, name + ": exit " + std::to_string(r.code));
    json j = parse_json(r.out);
    bool at_site = false;
    if (!j.is_null()) {
      for (const auto& meth : j["files"][0]["report"]["methods"])
        for (const auto& o : meth["obligations"])
          if (o["verdict"] == "fail" && o["loc"]["line"] == m.line && o["kind"] == m.kind) at_site = true;
    }
    c.require(at_site, name + ": no failed " + m.kind + " obligation on line " + std::to_string(m.line));
  }
  return std::to_string(ms.size()) + " mutations";
}

mpq_class to_mpq(const svl::Fraction& x) {
  mpq_class q(mpz_class(x.numerator().str()), mpz_class(x.denominator().str()));
  q.canonicalize();
  return q;
}

std::string fraction_laws(Criterion& c) {
  std::mt19937_64 rng(7);
  auto random_fraction = [&] {
    int k = std::uniform_int_distribution<int>(0, 9)(rng);
    if (k == 0) return svl::Fraction::zero();
    if (k == 1) return svl::Fraction::one();
    long long max_den = k < 5 ? 16 : 1000000000000000LL;
    long long den = std::uniform_int_distribution<long long>(1, max_den)(rng);
    return svl::Fraction(std::uniform_int_distribution<long long>(0, den)(rng), den);
  };
  const int cases = 1500;
  int bad = 0;
  for (int i = 0; i < cases; ++i) {
    svl::Fraction a = random_fraction(), b = random_fraction();
    mpq_class qa = to_mpq(a), qb = to_mpq(b);
    bool ok = true;
    svl::Fraction ab = svl::frac_cutoff_sub(a, b), ba = svl::frac_cutoff_sub(b, a);
    mpq_class diff = qa - qb;
    ok = ok && to_mpq(ab) == (diff > 0 ? diff : mpq_class(0));
    ok = ok && to_mpq(svl::frac_add(ab, ba)) == abs(diff) && (ab.is_zero() || ba.is_zero());
    const svl::Fraction& lo = qa <= qb ? a : b;
    const svl::Fraction& hi = qa <= qb ? b : a;
    ok = ok && svl::frac_add(lo, svl::frac_cutoff_sub(hi, lo)) == hi;
    ok = ok && svl::frac_cutoff_sub(svl::frac_add(lo, svl::frac_cutoff_sub(hi, lo)), lo) == svl::frac_cutoff_sub(hi, lo);
    if (qa + qb > 1) {
      try {
        svl::frac_add(a, b);
        ok = false;
      } catch (const svl::OverflowError&) {
      }
    } else {
      ok = ok && to_mpq(svl::frac_add(a, b)) == qa + qb;
    }
    if (!ok) ++bad;
  }
  c.require(bad == 0, std::to_string(bad) + " of " + std::to_string(cases) + " cases violate a law");
  return std::to_string(cases) + " cases, " + std::to_string(bad) + " failures";
}

const char* kHeapClass = R"(
/*@ given group (frac -> resource) rinv; @*/
public class H {
  private int x;
  private int y;
  /*@ resource P(int a) = true; @*/
  public void m() { }
}
)";

svl::ResourcePtr points_to(const std::string& field, svl::ExprPtr perm, svl::ExprPtr value) {
  auto r = std::make_shared<svl::Resource>();
  r->kind = svl::Resource::Kind::PointsTo;
  r->name = field;
  r->perm = std::move(perm);
  r->value = std::move(value);
  return r;
}

svl::ResourcePtr pred(const std::string& name, std::vector<svl::ExprPtr> args) {
  auto r = std::make_shared<svl::Resource>();
  r->kind = svl::Resource::Kind::Pred;
  r->name = name;
  r->args = std::move(args);
  return r;
}

std::string frame_property(Criterion& c) {
  svl::Program p = svl::parse(kHeapClass);
  const auto& cls = p.classes[0];
  svl::HeapOps ops(cls);
  std::mt19937_64 rng(8);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto frac = [](int n, int d) { return svl::make_binary("/", svl::make_int(n), svl::make_int(d)); };
  int checked = 0, bad = 0;
  for (int iter = 0; checked < 600 && iter < 100000; ++iter) {
    svl::Outcome h;
    h.heap.role_count = static_cast<int>(cls.roles().size());
    std::vector<svl::ResourcePtr> want;
    bool ok = true;
    auto produce = [&](const svl::ResourcePtr& r) {
      auto out = ops.produce(h, *r);
      if (out.size() != 1 || !out[0].failures.empty()) ok = false;
      else h = std::move(out[0]);
    };
    for (const char* f : {"x", "y"}) {
      if (pick(0, 3) == 0) continue;
      int den = pick(1, 8), num = pick(1, den), value = pick(-4, 9);
      produce(points_to(f, frac(num, den), svl::make_int(value)));
      if (pick(0, 2)) want.push_back(points_to(f, frac(pick(1, 2 * num), 2 * den), svl::make_int(value)));
    }
    for (int i = pick(0, 3); i > 0; --i) {
      int a = pick(0, 4);
      produce(pred("P", {svl::make_int(a)}));
      if (pick(0, 1)) want.push_back(pred("P", {svl::make_int(a)}));
    }
    if (int rn = pick(0, 4)) {
      produce(pred("rinv", {frac(rn, 4)}));
      if (pick(0, 1)) want.push_back(pred("rinv", {frac(pick(1, rn), 4)}));
    }
    if (!ok || want.empty()) continue;
    svl::ResourcePtr r = want[0];
    for (size_t i = 1; i < want.size(); ++i) r = svl::make_star(r, want[i]);
    auto consumed = ops.consume(h, *r);
    if (consumed.size() != 1 || !consumed[0].failures.empty()) continue;
    auto rebuilt = ops.produce(consumed[0], *r);
    ++checked;
    if (rebuilt.size() != 1 || !rebuilt[0].failures.empty() ||
        !svl::chunks_equivalent(rebuilt[0].heap, rebuilt[0].heap.chunks, h.heap.chunks))
      ++bad;
  }
  c.require(checked >= 500, "only " + std::to_string(checked) + " frame cases");
  c.require(bad == 0, std::to_string(bad) + " frame cases not reconstructed");
  return std::to_string(checked) + " cases, " + std::to_string(bad) + " failures";
}

std::string oracle_cross_check(Criterion& c) {
  auto start = Clock::now();
  std::ostringstream detail;
  for (const auto& f : kCorpus) {
    Run r = svl_cli("oracle --json --strict-bounds --loop-cap 4 --max-states 100000 " + corpus(f));
    c.require(r.code == 0, f + ": oracle exit " + std::to_string(r.code));
    json j = parse_json(r.out);
    if (j.is_null()) continue;
    c.require(!j["files"][0]["harnesses"].empty(), f + ": no harness");
    for (const auto& h : j["files"][0]["harnesses"]) {
      c.require(h["verdict"] == "clean", f + " " + h["harness"].get<std::string>() + ": " + h["verdict"].get<std::string>());
      detail << h["harness"].get<std::string>() << " " << h["states"] << " states; ";
    }
  }
  int replayed = 0;
  bool get_then_set = false;
  for (const auto& m : mutations()) {
    if (m.race_harness.empty()) continue;
    std::string name = fs::path(m.path).filename().string();
    Run r = svl_cli("oracle --json --harness " + m.race_harness + " " + m.path);
    json j = parse_json(r.out);
    if (r.code != 1 || j.is_null()) {
      c.require(false, name + ": no violation (exit " + std::to_string(r.code) + ")");
      continue;
    }
    const json& h = j["files"][0]["harnesses"][0];
    std::string schedule;
    for (const auto& t : h["schedule"]) schedule += (schedule.empty() ? "" : ",") + std::to_string(t.get<size_t>());
    json again;
    if (schedule.empty()) {
      again = h;  // violated during setup: the empty schedule is the trace
    } else {
      Run rr = svl_cli("oracle --json --harness " + m.race_harness + " --replay " + schedule + " " + m.path);
      json jr = parse_json(rr.out);
      if (rr.code == 1 && !jr.is_null()) again = jr["files"][0]["harnesses"][0];
    }
    bool same = !again.is_null() && again["verdict"] == "violation" && again["violation"] == h["violation"];
    c.require(same, name + ": schedule does not replay");
    if (same) {
      ++replayed;
      if (name == "semaphore-get-then-set.svl") get_then_set = true;
    }
  }
  c.require(get_then_set, "semaphore get-then-set race not replayed");
  c.require(replayed >= 3, "only " + std::to_string(replayed) + " replayed violations");
  double total = since(start);
  c.require(total < 60.0, "oracle took " + fmt(total));
  detail << replayed << " race mutations replayed; total " << fmt(total);
  return detail.str();
}

std::string determinism(Criterion& c) {
  std::string args = "verify --json";
  for (const auto& f : kCorpus) args += " " + corpus(f);
  Run a = svl_cli(args), b = svl_cli(args);
  c.require(a.code == 0 && b.code == 0, "verify did not pass");
  c.require(!a.out.empty() && a.out == b.out, "reports differ");
  return std::to_string(a.out.size()) + " bytes, identical";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string(Criterion&)>>> criteria = {
      {"corpus verdicts", corpus_verdicts},   {"compareAndSet transfers", cas_transfers},
      {"mutation suite", mutation_suite},     {"permission algebra properties", fraction_laws},
      {"entailment frame property", frame_property}, {"oracle cross-check", oracle_cross_check},
      {"deterministic reports", determinism},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Criterion c;
    std::string detail;
    try {
      detail = criteria[i].second(c);
    } catch (const std::exception& e) {
      c.problems.push_back(std::string("exception: ") + e.what());
    }
    while (detail.ends_with("; ")) detail.resize(detail.size() - 2);
    bool ok = c.problems.empty();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << detail << "\n";
    for (const auto& p : c.problems) std::cout << "  " << p << "\n";
  }
  return failed ? 1 : 0;
}
