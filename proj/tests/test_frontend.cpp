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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "svl/frontend.hpp"

namespace {

std::string read(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string corpus(const std::string& name) { return read(std::string(SVL_CORPUS_DIR) + "/" + name); }

const char* kCounter = R"(
/*@ given group (frac -> resource) rinv; @*/
public class Counter {
  private int x;
  /*@ roles rs = {A};
      group resource inv(frac p) = rinv(p);
      resource P(int v) = true;
      frac share(role r, int c) { return r == S ? 1 : 0; }
      boolean trans(role r, int c, int n) { return n == c + 1; } @*/
  private AtomicInteger/*@<rs, inv, share, trans>@*/ sync;

  /*@ requires PHOLE; @*/
  public void m() { }
}
)";

std::string counter(const std::string& pre) {
  std::string s = kCounter;
  s.replace(s.find("PHOLE"), 5, pre);
  return s;
}

void collect_locs(const std::vector<svl::StmtPtr>& body, std::vector<svl::SourceLoc>& out) {
  for (const auto& s : body) {
    out.push_back(s->loc);
    collect_locs(s->body, out);
    collect_locs(s->else_body, out);
  }
}

}  // namespace

TEST_CASE("semaphore parses into one class with three methods and a full protocol") {
  svl::Program p = svl::parse(corpus("semaphore.svl"));
  REQUIRE(p.classes.size() == 1);
  const svl::ClassDecl& c = p.classes[0];
  CHECK(c.name == "Semaphore");
  CHECK(c.methods.size() == 3);
  const svl::FieldDecl* sync = c.find_field("sync");
  REQUIRE(sync);
  REQUIRE(sync->protocol);
  CHECK(sync->protocol->roles == "rs");
  CHECK(sync->protocol->inv == "inv");
  CHECK(sync->protocol->share == "share");
  CHECK(sync->protocol->trans == "trans");
  CHECK(c.roles() == std::vector<std::string>{"S", "T"});
  CHECK(p.harnesses.size() == 2);
}

TEST_CASE("empty input has no classes") {
  CHECK(svl::parse("").classes.empty());
  CHECK(svl::parse("  // only a comment\n").classes.empty());
}

TEST_CASE("loops need an invariant") {
  const char* src = R"(
public class L {
  public void m() { boolean b = true; while (b) { } }
}
)";
  try {
    svl::parse(src);
    FAIL("expected a parse error");
  } catch (const svl::ParseError& e) {
    CHECK(e.message() == "missing loop invariant");
    CHECK(e.loc().line == 3);
  }
}

TEST_CASE("syntax and resolution errors carry positions") {
  CHECK_THROWS_AS(svl::parse("public class A { public void m() { int x = ; } }"), svl::ParseError);
  try {
    svl::parse("public class A {\n  public void m() { y = 1; }\n}");
    FAIL("expected a resolve error");
  } catch (const svl::ResolveError& e) {
    CHECK(e.loc().line == 2);
  }
}

TEST_CASE("corpus programs are well formed") {
  for (const char* f : {"semaphore.svl", "countdownlatch.svl", "spinlock.svl"}) {
    CAPTURE(f);
    auto diags = svl::wellformed(svl::parse(corpus(f)));
    for (const auto& d : diags) MESSAGE(d.loc.to_string() << " " << d.message);
    CHECK(diags.empty());
  }
}

TEST_CASE("predicate arity mismatch is one diagnostic") {
  CHECK(svl::wellformed(svl::parse(counter("P(1)"))).empty());
  auto diags = svl::wellformed(svl::parse(counter("P(1, 2)")));
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("expects 1 arguments") != std::string::npos);
}

TEST_CASE("share writing a heap field is impure") {
  std::string src = counter("true");
  std::string from = "frac share(role r, int c) { return";
  src.replace(src.find(from), from.size(), "frac share(role r, int c) { x = 1; return");
  auto diags = svl::wellformed(svl::parse(src));
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message == "share must be pure");
}

TEST_CASE("type errors in guards are reported") {
  auto diags = svl::wellformed(svl::parse(counter("1 + true")));
  CHECK(!diags.empty());
}

TEST_CASE("pretty printing round-trips and parsing is deterministic") {
  for (const char* f : {"semaphore.svl", "countdownlatch.svl", "spinlock.svl"}) {
    CAPTURE(f);
    std::string src = corpus(f);
    svl::Program a = svl::parse(src);
    svl::Program b = svl::parse(src);
    CHECK(svl::structural_dump(a) == svl::structural_dump(b));
    std::string printed = svl::pretty_print(a);
    svl::Program c = svl::parse(printed);
    CHECK(svl::structural_dump(a) == svl::structural_dump(c));
    CHECK(svl::pretty_print(c) == printed);
  }
}

TEST_CASE("statement locations are unique") {
  for (const char* f : {"semaphore.svl", "countdownlatch.svl", "spinlock.svl"}) {
    CAPTURE(f);
    svl::Program p = svl::parse(corpus(f));
    for (const auto& m : p.classes[0].methods) {
      std::vector<svl::SourceLoc> locs;
      collect_locs(m.body, locs);
      std::set<std::pair<int, int>> seen;
      for (const auto& l : locs) {
        CHECK(l.line > 0);
        CHECK(seen.insert({l.line, l.col}).second);
      }
    }
  }
}

TEST_CASE("annotation tokens are marked") {
  auto toks = svl::lex("int a; /*@ ghost int b; @*/ int c;");
  bool ghost_seen = false;
  for (const auto& t : toks) {
    if (t.text == "ghost") ghost_seen = t.annotation;
    if (t.text == "a" || t.text == "c") CHECK(!t.annotation);
  }
  CHECK(ghost_seen);
}
