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
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "svl/frontend.hpp"
#include "svl/symheap.hpp"

using svl::Chunk;
using svl::Expr;
using svl::ExprPtr;
using svl::Outcome;
using svl::Resource;
using svl::ResourcePtr;
using svl::Term;

namespace {

const char* kHeapClass = R"(
/*@ given group (frac -> resource) rinv; @*/
public class H {
  private int x;
  private int y;
  /*@ resource P(int a) = true;
      resource Q() = PointsTo(x, 1, 5); @*/
  public void m() { }
}
)";

const svl::Program& heap_program() {
  static const svl::Program p = svl::parse(kHeapClass);
  return p;
}

const svl::Program& semaphore() {
  static const svl::Program p = [] {
    std::ifstream in(std::string(SVL_CORPUS_DIR) + "/semaphore.svl");
    std::stringstream ss;
    ss << in.rdbuf();
    return svl::parse(ss.str());
  }();
  return p;
}

ExprPtr num(long long v) { return svl::make_int(v); }
ExprPtr frac(long long n, long long d) { return svl::make_binary("/", num(n), num(d)); }
ExprPtr exists(const std::string& n) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Existential;
  e->name = n;
  e->binding = svl::Binding::Existential;
  return e;
}

ResourcePtr points_to(const std::string& field, ExprPtr perm, ExprPtr value) {
  auto r = std::make_shared<Resource>();
  r->kind = Resource::Kind::PointsTo;
  r->name = field;
  r->perm = std::move(perm);
  r->value = std::move(value);
  return r;
}

ResourcePtr pred(const std::string& name, std::vector<ExprPtr> args, ExprPtr receiver = nullptr) {
  auto r = std::make_shared<Resource>();
  r->kind = Resource::Kind::Pred;
  r->name = name;
  r->args = std::move(args);
  r->receiver = std::move(receiver);
  return r;
}

Outcome start(const svl::ClassDecl& cls) {
  Outcome o;
  o.heap.role_count = static_cast<int>(cls.roles().size());
  return o;
}

Outcome single(std::vector<Outcome> os) {
  REQUIRE(os.size() == 1);
  return std::move(os[0]);
}

Chunk pt_chunk(const std::string& field, svl::Rational perm, long long value) {
  Chunk c;
  c.kind = Chunk::Kind::PointsTo;
  c.receiver = svl::kThis;
  c.name = field;
  c.perm = Term(perm);
  c.value = Term(value);
  return c;
}

const svl::Stmt* find_stmt(const std::vector<svl::StmtPtr>& body, svl::Stmt::Kind kind, int line) {
  for (const auto& s : body) {
    if (s->kind == kind && s->loc.line == line) return s.get();
    if (auto* t = find_stmt(s->body, kind, line)) return t;
    if (auto* t = find_stmt(s->else_body, kind, line)) return t;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("produce") {
  const auto& cls = heap_program().classes[0];
  svl::HeapOps ops(cls);

  Outcome o = start(cls);
  o.env.vars["v"] = Term(5LL);
  auto v = std::make_shared<Expr>(*svl::make_var("v"));
  v->binding = svl::Binding::Param;
  Outcome a = single(ops.produce(o, *points_to("x", num(1), v)));
  CHECK(a.heap.chunks == std::vector<Chunk>{pt_chunk("x", 1, 5)});

  Outcome b = single(ops.produce(start(cls), *pred("rinv", {num(0)})));
  CHECK(b.heap.chunks.empty());

  Outcome c = single(ops.produce(start(cls), *points_to("x", frac(1, 2), num(5))));
  Outcome d = single(ops.produce(c, *points_to("x", frac(1, 2), num(5))));
  CHECK(d.heap.chunks == std::vector<Chunk>{pt_chunk("x", 1, 5)});
  CHECK(!d.heap.inconsistent);

  Outcome e = single(ops.produce(d, *points_to("x", frac(1, 2), num(5))));
  CHECK(e.heap.inconsistent);
}

TEST_CASE("consume") {
  const auto& cls = heap_program().classes[0];
  svl::HeapOps ops(cls);
  Outcome full = single(ops.produce(start(cls), *points_to("x", num(1), num(5))));

  Outcome a = single(ops.consume(full, *points_to("x", frac(1, 2), exists("v"))));
  CHECK(a.failures.empty());
  CHECK(a.heap.chunks == std::vector<Chunk>{pt_chunk("x", svl::Rational(1, 2), 5)});
  CHECK(a.env.vars.at("v") == Term(5LL));

  Outcome b = single(ops.consume(a, *points_to("x", num(1), num(5))));
  REQUIRE(b.failures.size() == 1);
  CHECK(b.failures[0].reason == "insufficient permission");
  CHECK(b.failures[0].candidates.size() == 1);

  Outcome p = single(ops.produce(start(cls), *pred("P", {num(3)})));
  Outcome c = single(ops.consume(p, *pred("P", {num(3)})));
  CHECK(c.failures.empty());
  CHECK(c.heap.chunks.empty());

  Outcome d = single(ops.consume(p, *pred("P", {num(4)})));
  CHECK(d.failures.size() == 1);
}

TEST_CASE("fold and unfold") {
  const auto& cls = heap_program().classes[0];
  svl::HeapOps ops(cls);
  Outcome h = single(ops.produce(start(cls), *points_to("x", num(1), num(5))));
  Outcome folded = single(ops.fold(h, *pred("Q", {})));
  CHECK(folded.failures.empty());
  REQUIRE(folded.heap.chunks.size() == 1);
  CHECK(folded.heap.chunks[0].kind == Chunk::Kind::Pred);
  CHECK(folded.heap.chunks[0].name == "Q");
  CHECK(folded.heap.chunks[0].perm == Term(1LL));
  Outcome back = single(ops.unfold(folded, *pred("Q", {})));
  CHECK(back.failures.empty());
  CHECK(svl::chunks_equivalent(back.heap, back.heap.chunks, h.heap.chunks));

  Outcome missing = single(ops.fold(start(cls), *pred("Q", {})));
  CHECK(missing.failures.size() == 1);
}

TEST_CASE("unfolding initialized exposes the handle") {
  const auto& cls = semaphore().classes[0];
  svl::HeapOps ops(cls);
  Outcome o = start(cls);
  o.env.fields["num"] = o.heap.declare("num", svl::Sort::Int);
  auto d = std::make_shared<Expr>(*svl::make_var("d"));
  d->binding = svl::Binding::GhostParam;
  auto p = std::make_shared<Expr>(*svl::make_var("p"));
  p->binding = svl::Binding::GhostParam;
  o.env.vars["d"] = o.heap.declare("d", svl::Sort::Int);
  o.env.vars["p"] = o.heap.declare("p", svl::Sort::Frac);
  o.heap.assume(svl::compare(o.env.vars["p"], ">", Term(0LL)));
  Outcome h = single(ops.produce(o, *pred("initialized", {d, p})));
  Outcome u = single(ops.unfold(h, *pred("initialized", {d, p})));
  CHECK(u.failures.empty());
  REQUIRE(u.heap.chunks.size() == 1);
  const Chunk& c = u.heap.chunks[0];
  CHECK(c.receiver == "sync");
  CHECK(c.name == "handle");
  CHECK(c.args == std::vector<Term>{Term(static_cast<long long>(cls.role_index("T"))), Term::symbol("d")});
  CHECK(c.perm == Term::symbol("p"));
}

TEST_CASE("folding the acquire invariant difference consumes nothing") {
  const auto& cls = semaphore().classes[0];
  const svl::MethodDecl* acquire = cls.find_method("acquire");
  REQUIRE(acquire);
  const svl::Stmt* fold = nullptr;
  for (int line = 1; line < 200 && !fold; ++line) {
    const svl::Stmt* s = find_stmt(acquire->body, svl::Stmt::Kind::Fold, line);
    if (s && svl::resource_to_string(*s->pred).find("nextc") != std::string::npos) fold = s;
  }
  REQUIRE(fold);
  svl::HeapOps ops(cls);
  for (long long cv : {1, 2, 3}) {
    Outcome o = start(cls);
    Term n = o.heap.declare("num", svl::Sort::Int);
    o.heap.assume(svl::compare(n, "==", Term(4LL)));
    o.env.fields["num"] = n;
    o.env.vars["c"] = Term(cv);
    o.env.vars["nextc"] = Term(cv - 1);
    for (auto& r : ops.fold(o, *fold->pred)) {
      CHECK(r.failures.empty());
      CHECK(r.heap.chunks.empty());
    }
  }
}

TEST_CASE("normalization merges chunks and erases zero permissions") {
  svl::SymbolicHeap h;
  h.chunks.push_back(pt_chunk("x", svl::Rational(1, 3), 5));
  h.chunks.push_back(pt_chunk("y", 0, 1));
  h.chunks.push_back(pt_chunk("x", svl::Rational(1, 3), 5));
  h.normalize();
  CHECK(h.chunks == std::vector<Chunk>{pt_chunk("x", svl::Rational(2, 3), 5)});
  svl::SymbolicHeap again = h;
  again.normalize();
  CHECK(again.chunks == h.chunks);
  CHECK(h.render().find("x") != std::string::npos);
}

TEST_CASE("frame property over random heaps") {
  const auto& cls = heap_program().classes[0];
  svl::HeapOps ops(cls);
  std::mt19937_64 rng(99);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int checked = 0, failures_seen = 0;
  for (int iter = 0; checked < 600; ++iter) {
    // Heap: up to two points-to chunks, some P instances, a scaled rinv.
    std::vector<ResourcePtr> parts;
    struct Pt {
      std::string field;
      int num, den, value;
    };
    std::vector<Pt> pts;
    for (const char* f : {"x", "y"}) {
      if (pick(0, 3) == 0) continue;
      int den = pick(1, 6);
      pts.push_back({f, pick(1, den), den, pick(-3, 9)});
      parts.push_back(points_to(f, frac(pts.back().num, den), num(pts.back().value)));
    }
    std::vector<int> ps;
    for (int i = pick(0, 3); i > 0; --i) {
      ps.push_back(pick(0, 4));
      parts.push_back(pred("P", {num(ps.back())}));
    }
    int rn = pick(0, 4), rd = 4;
    if (rn) parts.push_back(pred("rinv", {frac(rn, rd)}));
    Outcome h = start(cls);
    for (const auto& r : parts) h = single(ops.produce(h, *r));
    REQUIRE(h.failures.empty());

    // Resource to consume: a sub-multiset with partial amounts.
    std::vector<ResourcePtr> want;
    int k = 0;
    for (const auto& pt : pts) {
      if (pick(0, 2) == 0) continue;
      int part = pick(1, pt.num * 2);  // in units of 1/(2 den)
      ExprPtr value = pick(0, 1) ? num(pt.value) : exists("w" + std::to_string(k++));
      want.push_back(points_to(pt.field, frac(part, 2 * pt.den), value));
    }
    std::vector<int> left = ps;
    while (!left.empty() && pick(0, 1)) {
      size_t i = static_cast<size_t>(pick(0, static_cast<int>(left.size()) - 1));
      ExprPtr arg = pick(0, 2) ? num(left[i]) : exists("w" + std::to_string(k++));
      want.push_back(pred("P", {arg}));
      left.erase(left.begin() + static_cast<long>(i));
    }
    if (rn && pick(0, 1)) want.push_back(pred("rinv", {frac(pick(1, rn), rd)}));
    if (want.empty()) continue;
    ResourcePtr r = want[0];
    for (size_t i = 1; i < want.size(); ++i) r = svl::make_star(r, want[i]);

    auto consumed = ops.consume(h, *r);
    REQUIRE(consumed.size() == 1);
    Outcome residual = consumed[0];
    if (!residual.failures.empty()) {
      ++failures_seen;
      continue;
    }
    Outcome rebuilt = single(ops.produce(residual, *r));
    CAPTURE(h.heap.render());
    CAPTURE(svl::resource_to_string(*r));
    CAPTURE(rebuilt.heap.render());
    CHECK(svl::chunks_equivalent(rebuilt.heap, rebuilt.heap.chunks, h.heap.chunks));
    CHECK(!rebuilt.heap.inconsistent);
    ++checked;
  }
  CHECK(checked >= 500);
  MESSAGE(checked << " frame cases, " << failures_seen << " non-entailed resources skipped");
}
