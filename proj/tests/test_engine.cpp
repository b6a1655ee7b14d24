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

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "svl/engine.hpp"
#include "svl/frontend.hpp"

using svl::Chunk;
using svl::Outcome;
using svl::Term;

namespace {

std::string read(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string corpus_path(const std::string& name) { return std::string(SVL_CORPUS_DIR) + "/" + name; }

svl::Program load(const std::string& name) { return svl::parse(read(corpus_path(name))); }

const svl::MethodReport& method(const svl::Report& r, const std::string& name) {
  for (const auto& m : r.methods)
    if (m.name == name) return m;
  FAIL("no method " << name);
  return r.methods.front();
}

std::vector<const svl::Obligation*> transfers(const svl::MethodReport& m) {
  std::vector<const svl::Obligation*> out;
  for (const auto& o : m.obligations)
    if (o.transfer) out.push_back(&o);
  return out;
}

/// A class whose share is the same in every state and whose trans allows
/// everything but a jump to 7.
const char* kFlat = R"(
/*@ given group (frac -> resource) rinv; @*/
public class Flat {
  /*@ roles rs = {A};
      group resource inv(frac p) = rinv(p);
      frac share(role r, int c) { return r == S ? 1 / 2 : 0; }
      boolean trans(role r, int c, int n) { return n != 7; } @*/
  private AtomicInteger/*@<rs, inv, share, trans>@*/ sync;

  public void nothing() { }
}
)";

struct Fixture {
  svl::Program program;
  const svl::ClassDecl* cls;
  svl::HeapOps ops;
  svl::CellContract cell;
  Outcome o;

  explicit Fixture(svl::Program p)
      : program(std::move(p)),
        cls(&program.classes.at(0)),
        ops(*cls),
        cell(ops, *cls->find_field("sync")) {
    o.heap.role_count = static_cast<int>(cls->roles().size());
  }

  Term role(const std::string& r) const { return Term(static_cast<long long>(cls->role_index(r))); }

  size_t handles(const Outcome& x) const {
    size_t n = 0;
    for (const auto& c : x.heap.chunks)
      if (c.name == svl::kHandle) ++n;
    return n;
  }

  const Chunk* find(const Outcome& x, const std::string& name) const {
    for (const auto& c : x.heap.chunks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

}  // namespace

TEST_CASE("corpus programs verify") {
  for (const char* f : {"semaphore.svl", "countdownlatch.svl", "spinlock.svl"}) {
    CAPTURE(f);
    svl::Report r = svl::verify_program(load(f));
    CHECK(r.verdict == svl::Verdict::Pass);
    CHECK(r.failed() == 0);
    CHECK(r.methods.size() == 3);
    for (const auto& m : r.methods) {
      CAPTURE(m.name);
      CHECK(m.warnings.empty());
      CHECK(!m.obligations.empty());
    }
  }
}

TEST_CASE("empty method with empty contract passes") {
  svl::Program p = svl::parse("public class E {\n  public void m() { }\n}\n");
  svl::Report r = svl::verify_program(p);
  REQUIRE(r.methods.size() == 1);
  CHECK(r.methods[0].verdict == svl::Verdict::Pass);
  CHECK(r.methods[0].obligations.empty());
  CHECK(r.failed() == 0);
}

TEST_CASE("acquire gains one permit at compareAndSet, release returns it") {
  svl::Report r = svl::verify_program(load("semaphore.svl"));
  auto acq = transfers(method(r, "acquire"));
  REQUIRE(acq.size() == 1);
  CHECK(acq[0]->kind == "precondition");
  CHECK(acq[0]->description.find("compareAndSet") != std::string::npos);
  CHECK(acq[0]->transfer->consumed == std::set<std::string>{"0"});
  CHECK(acq[0]->transfer->produced == std::set<std::string>{"1/num"});
  auto rel = transfers(method(r, "release"));
  REQUIRE(rel.size() == 1);
  CHECK(rel[0]->transfer->consumed == std::set<std::string>{"1/num"});
  CHECK(rel[0]->transfer->produced == std::set<std::string>{"0"});
}

TEST_CASE("countDown hands in 1/count at compareAndSet") {
  svl::Report r = svl::verify_program(load("countdownlatch.svl"));
  auto cd = transfers(method(r, "countDown"));
  REQUIRE(cd.size() == 1);
  CHECK(cd[0]->transfer->consumed == std::set<std::string>{"1/count"});
  CHECK(cd[0]->transfer->produced == std::set<std::string>{"0"});
}

TEST_CASE("lock takes the whole resource at compareAndSet") {
  svl::Report r = svl::verify_program(load("spinlock.svl"));
  auto l = transfers(method(r, "lock"));
  REQUIRE(l.size() == 1);
  CHECK(l[0]->transfer->consumed == std::set<std::string>{"0"});
  CHECK(l[0]->transfer->produced == std::set<std::string>{"1"});
}

TEST_CASE("every mutation fails where its header says") {
  std::regex header(R"(expect-fail: line (\d+), kind ([a-z-]+))");
  int count = 0;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(corpus_path("mutations"))) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    CAPTURE(path.filename().string());
    std::string src = read(path.string());
    std::smatch m;
    REQUIRE(std::regex_search(src, m, header));
    int line = std::stoi(m[1]);
    std::string kind = m[2];
    svl::Program p = svl::parse(src);
    CHECK(svl::wellformed(p).empty());
    svl::Report r = svl::verify_program(p);
    CHECK(r.verdict == svl::Verdict::Fail);
    bool found = false;
    for (const auto& mr : r.methods)
      for (const auto& o : mr.obligations)
        found = found || (o.verdict == svl::Verdict::Fail && o.loc.line == line && o.kind == kind);
    CHECK(found);
    ++count;
  }
  CHECK(count >= 10);
}

TEST_CASE("verification is deterministic") {
  svl::Program p = load("semaphore.svl");
  svl::Report a = svl::verify_program(p), b = svl::verify_program(p);
  REQUIRE(a.methods.size() == b.methods.size());
  for (size_t i = 0; i < a.methods.size(); ++i) {
    REQUIRE(a.methods[i].obligations.size() == b.methods[i].obligations.size());
    for (size_t j = 0; j < a.methods[i].obligations.size(); ++j) {
      const auto& x = a.methods[i].obligations[j];
      const auto& y = b.methods[i].obligations[j];
      CHECK(x.loc == y.loc);
      CHECK(x.kind == y.kind);
      CHECK(x.tag == y.tag);
      CHECK(x.verdict == y.verdict);
      CHECK(x.detail == y.detail);
    }
  }
}

TEST_CASE("get on a semaphore only updates the view") {
  Fixture f(load("semaphore.svl"));
  Term num = f.o.heap.declare("num", svl::Sort::Int);
  f.o.heap.assume(svl::compare(num, ">", Term(0LL)));
  f.o.env.fields["num"] = num;
  Term d = f.o.heap.declare("d", svl::Sort::Int), p = f.o.heap.declare("p", svl::Sort::Frac);
  f.o.heap.assume(svl::compare(p, ">", Term(0LL)));
  f.cell.produce_handle(f.o, f.role("T"), d, p);
  for (auto& v : f.cell.get(f.o, {f.role("T"), d, p}, {})) {
    CHECK(v.o.failures.empty());
    REQUIRE(v.o.heap.chunks.size() == 1);
    const Chunk& h = v.o.heap.chunks[0];
    CHECK(h.name == svl::kHandle);
    CHECK(h.args[1] == v.value);
    CHECK(h.perm == p);
  }
}

TEST_CASE("a waiter that reads zero obtains its share of the latch") {
  Fixture f(load("countdownlatch.svl"));
  Term count = f.o.heap.declare("count", svl::Sort::Int);
  Term waiters = f.o.heap.declare("waiters", svl::Sort::Int);
  f.o.heap.assume(svl::compare(count, ">", Term(0LL)));
  f.o.heap.assume(svl::compare(waiters, ">", Term(0LL)));
  f.o.env.fields["count"] = count;
  f.o.env.fields["waiters"] = waiters;
  Term d(2LL), p(1LL);
  f.o.heap.assume(svl::compare(count, "==", Term(2LL)));
  f.cell.produce_handle(f.o, f.role("W"), d, p);
  bool saw_zero = false;
  for (auto& v : f.cell.get(f.o, {f.role("W"), d, p}, {})) {
    CHECK(v.o.failures.empty());
    const Chunk* inv = f.find(v.o, "inv");
    if (v.o.heap.proves(svl::compare(v.value, "==", Term(0LL)))) {
      saw_zero = true;
      REQUIRE(inv);
      CHECK(inv->perm == Term(1LL) / waiters);
    } else if (v.o.heap.proves(svl::compare(v.value, "!=", Term(0LL)))) {
      CHECK(!inv);
    }
  }
  CHECK(saw_zero);
}

TEST_CASE("compareAndSet explores both branches; failure returns the resources") {
  Fixture f(load("semaphore.svl"));
  Term num = f.o.heap.declare("num", svl::Sort::Int);
  f.o.heap.assume(svl::compare(num, ">", Term(0LL)));
  f.o.env.fields["num"] = num;
  Term c = f.o.heap.declare("c", svl::Sort::Int), p = f.o.heap.declare("p", svl::Sort::Frac);
  f.o.heap.assume(svl::compare(c, ">", Term(0LL)));
  f.o.heap.assume(svl::compare(c, "<=", num));
  f.o.heap.assume(svl::compare(p, ">", Term(0LL)));
  f.cell.produce_handle(f.o, f.role("T"), c, p);
  std::vector<Chunk> before = f.o.heap.chunks;
  svl::Transfer t;
  auto branches = f.cell.cas(f.o, c, c - Term(1LL), {f.role("T"), c, p}, {}, {}, &t);
  int successes = 0, failures = 0;
  for (auto& v : branches) {
    CHECK(v.o.failures.empty());
    CHECK(f.handles(v.o) == 1);
    if (v.o.heap.proves(svl::compare(v.value, "==", Term(1LL)))) {
      ++successes;
      const Chunk* inv = f.find(v.o, "inv");
      REQUIRE(inv);
      CHECK(inv->perm == Term(1LL) / num);
      CHECK(f.find(v.o, svl::kHandle)->args[1] == c - Term(1LL));
    } else {
      ++failures;
      CHECK(svl::chunks_equivalent(v.o.heap, v.o.heap.chunks, before));
    }
  }
  CHECK(successes >= 1);
  CHECK(failures >= 1);
  CHECK(t.consumed == std::set<std::string>{"0"});
  CHECK(t.produced == std::set<std::string>{"1/num"});
}

TEST_CASE("equal shares move only inv(0)") {
  Fixture f(svl::parse(kFlat));
  Term x = f.o.heap.declare("x", svl::Sort::Int), n(3LL);
  f.cell.produce_handle(f.o, f.role("A"), x, Term(1LL));
  svl::Transfer t;
  for (auto& v : f.cell.cas(f.o, x, n, {f.role("A"), x, Term(1LL)}, {}, {}, &t)) {
    CHECK(v.o.failures.empty());
    CHECK(f.find(v.o, "inv") == nullptr);
  }
  CHECK(t.consumed == std::set<std::string>{"0"});
  CHECK(t.produced == std::set<std::string>{"0"});
}

TEST_CASE("set") {
  Fixture f(svl::parse(kFlat));
  Term d = f.o.heap.declare("d", svl::Sort::Int);
  f.cell.produce_handle(f.o, f.role("A"), d, Term(1LL));
  SUBCASE("illegal transition fails") {
    auto out = f.cell.set(f.o, Term(7LL), {f.role("A"), d, Term(1LL)}, {});
    REQUIRE(!out.empty());
    bool illegal = false;
    for (auto& o : out)
      for (auto& fl : o.failures) illegal = illegal || fl.reason == "illegal transition";
    CHECK(illegal);
  }
  SUBCASE("share(S, n) must be supplied") {
    auto out = f.cell.set(f.o, Term(3LL), {f.role("A"), d, Term(1LL)}, {});
    REQUIRE(out.size() == 1);
    CHECK(out[0].failures.size() == 1);
  }
  SUBCASE("supplied resources are consumed and the view moves") {
    f.cell.produce_inv(f.o, Term(svl::Rational(1, 2)));
    auto out = f.cell.set(f.o, Term(3LL), {f.role("A"), d, Term(1LL)}, {});
    REQUIRE(out.size() == 1);
    CHECK(out[0].failures.empty());
    REQUIRE(out[0].heap.chunks.size() == 1);
    CHECK(out[0].heap.chunks[0].args[1] == Term(3LL));
  }
}

TEST_CASE("zero-resource set on the spinlock only moves the handle") {
  Fixture f(load("spinlock.svl"));
  f.cell.produce_handle(f.o, f.role("L"), Term(0LL), Term(1LL));
  // share(L, 0) = 0 and share(S, 1) = 0.
  auto out = f.cell.set(f.o, Term(1LL), {f.role("L"), Term(0LL), Term(1LL)}, {});
  REQUIRE(out.size() == 1);
  CHECK(out[0].failures.empty());
  REQUIRE(out[0].heap.chunks.size() == 1);
  CHECK(out[0].heap.chunks[0].args[1] == Term(1LL));
}

TEST_CASE("operations without a handle fail") {
  Fixture f(svl::parse(kFlat));
  Term d = f.o.heap.declare("d", svl::Sort::Int);
  auto out = f.cell.get(f.o, {f.role("A"), d, Term(1LL)}, {});
  REQUIRE(!out.empty());
  CHECK(!out[0].o.failures.empty());
}

TEST_CASE("constructor needs inv(share(S, v)) and issues one handle per role") {
  Fixture f(svl::parse(kFlat));
  auto missing = f.cell.construct(f.o, Term(0LL), {});
  REQUIRE(missing.size() == 1);
  CHECK(!missing[0].failures.empty());

  f.cell.produce_inv(f.o, Term(svl::Rational(1, 2)));
  auto ok = f.cell.construct(f.o, Term(0LL), {});
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].failures.empty());
  CHECK(f.handles(ok[0]) == f.cls->roles().size() - 1);  // every role but S
  for (const auto& c : ok[0].heap.chunks) CHECK(c.perm == Term(1LL));
}

TEST_CASE("the latch constructor consumes nothing") {
  svl::Report r = svl::verify_program(load("countdownlatch.svl"));
  const auto& ctor = method(r, "CountDownLatch");
  CHECK(ctor.verdict == svl::Verdict::Pass);
  Fixture f(load("countdownlatch.svl"));
  Term count = f.o.heap.declare("count", svl::Sort::Int);
  f.o.heap.assume(svl::compare(count, ">", Term(0LL)));
  f.o.env.fields["count"] = count;
  Term waiters = f.o.heap.declare("waiters", svl::Sort::Int);
  f.o.heap.assume(svl::compare(waiters, ">", Term(0LL)));
  f.o.env.fields["waiters"] = waiters;
  auto out = f.cell.construct(f.o, count, {});
  for (const auto& o : out) {
    CHECK(o.failures.empty());
    CHECK(f.find(o, "inv") == nullptr);
  }
}
