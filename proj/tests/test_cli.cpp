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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

struct Run {
  int code;
  std::string out;
};

Run svl_cli(const std::string& args) {
  std::string cmd = std::string(SVL_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string corpus(const std::string& name) { return std::string(SVL_CORPUS_DIR) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST_CASE("verify passes the semaphore") {
  Run r = svl_cli("verify " + corpus("semaphore.svl"));
  CHECK(r.code == 0);
  CHECK(r.out.find("3 methods, ") != std::string::npos);
  CHECK(r.out.find("obligations, all passed") != std::string::npos);
}

TEST_CASE("verify reports the failing compareAndSet") {
  Run r = svl_cli("verify " + corpus("mutations/semaphore-missing-invariant-conjunct.svl"));
  CHECK(r.code == 1);
  CHECK(r.out.find("fail 90:21 precondition release: sync.compareAndSet") != std::string::npos);
}

TEST_CASE("usage errors") {
  Run none = svl_cli("verify");
  CHECK(none.code == 2);
  CHECK(none.out.find("Usage") != std::string::npos);
  CHECK(svl_cli("").code == 2);
  CHECK(svl_cli("frobnicate x.svl").code == 2);
  CHECK(svl_cli("verify /nonexistent/file.svl").code == 2);
  CHECK(svl_cli("oracle --max-states 0 " + corpus("semaphore.svl")).code == 2);
  CHECK(svl_cli("--help").code == 0);
}

TEST_CASE("parse and well-formedness errors exit 2") {
  std::string bad = temp_file("svl_cli_bad.svl", "public class A {\n  public void m() { int x = ; }\n}\n");
  Run r = svl_cli("verify " + bad);
  CHECK(r.code == 2);
  CHECK(r.out.find(":2:") != std::string::npos);
  std::string ill = temp_file("svl_cli_ill.svl", "public class A {\n  public void m() { int x = true; }\n}\n");
  CHECK(svl_cli("check-syntax " + ill).code == 2);
  CHECK(svl_cli("check-syntax " + corpus("spinlock.svl")).code == 0);
}

TEST_CASE("oracle exit codes") {
  CHECK(svl_cli("oracle " + corpus("spinlock.svl")).code == 0);
  Run v = svl_cli("oracle " + corpus("mutations/spinlock-get-then-set.svl"));
  CHECK(v.code == 1);
  CHECK(v.out.find("write-without-permission") != std::string::npos);
  CHECK(svl_cli("oracle --max-states 5 " + corpus("semaphore.svl")).code == 0);
  CHECK(svl_cli("oracle --strict-bounds --max-states 5 " + corpus("semaphore.svl")).code == 3);
  CHECK(svl_cli("oracle --harness nope " + corpus("semaphore.svl")).code == 2);
}

TEST_CASE("oracle replays a schedule") {
  std::string f = corpus("mutations/semaphore-get-then-set.svl");
  Run v = svl_cli("oracle --harness one_permit --replay 0,0,0 " + f);
  CHECK(v.code == 1);
  CHECK(v.out.find("write-without-permission") != std::string::npos);
  CHECK(svl_cli("oracle --harness one_permit --replay 0 " + f).code == 0);
  Run bad = svl_cli("oracle --harness one_permit --replay 9 " + f);
  CHECK(bad.code == 2);
  CHECK(bad.out.find("infeasible schedule") != std::string::npos);
  CHECK(svl_cli("oracle --replay 0 " + f).code == 2);  // needs --harness
}

TEST_CASE("text and JSON agree on every verdict") {
  std::vector<std::string> files;
  for (const char* f : {"semaphore.svl", "countdownlatch.svl", "spinlock.svl"}) files.push_back(corpus(f));
  for (const auto& e : std::filesystem::directory_iterator(corpus("mutations"))) files.push_back(e.path().string());
  for (const auto& f : files) {
    CAPTURE(f);
    Run text = svl_cli("verify " + f);
    Run json = svl_cli("verify --json " + f);
    CHECK(text.code == json.code);
    auto j = nlohmann::json::parse(json.out);
    REQUIRE(j["files"].size() == 1);
    bool passed = j["files"][0]["status"] == "pass";
    CHECK(passed == (text.out.find("all passed") != std::string::npos));
    CHECK(j["files"][0]["report"]["failed"].get<int>() == (passed ? 0 : j["files"][0]["report"]["failed"].get<int>()));
  }
}

TEST_CASE("JSON reports are byte-identical across runs") {
  std::string args = "verify --json " + corpus("semaphore.svl") + " " + corpus("countdownlatch.svl") + " " +
                     corpus("spinlock.svl");
  Run a = svl_cli(args), b = svl_cli(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  Run oa = svl_cli("oracle --json " + corpus("mutations/semaphore-get-then-set.svl"));
  Run ob = svl_cli("oracle --json " + corpus("mutations/semaphore-get-then-set.svl"));
  CHECK(oa.out == ob.out);
  auto j = nlohmann::json::parse(oa.out);
  CHECK(j["files"][0]["harnesses"][0]["verdict"] == "violation");
  CHECK(!j["files"][0]["harnesses"][0]["trace"].empty());
}
