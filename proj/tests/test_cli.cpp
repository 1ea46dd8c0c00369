// Copyright 2026 The LabelForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "json.hpp"
#include "support/project_fixture.hpp"

using namespace labelforge;
using namespace labelforge::testing;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// Runs the CLI with `args` (already shell-quoted where needed).
Run cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = quote(LABELFORGE_CLI) + " " + args + " >" + quote(out.string()) + " 2>" +
                          quote(err.string());
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

struct Workspace {
  TempDir dir;
  std::string project;
  Workspace() {
    const ProjectSources s = write_sources(dir);
    project = (dir / "proj").string();
    const Run r = cli(dir, "ingest -p " + quote(project) + " --labels " + quote(s.labels.string()) +
                               " --embeddings " + quote(s.embeddings->string()) + " --partition " +
                               quote(s.partition->string()) + " --identities " +
                               quote(s.identities->string()));
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  Run run(const std::string& args) { return cli(dir, args); }
  std::string p() const { return " -p " + quote(project) + " "; }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  TempDir d;
  CHECK(cli(d, "bogus").code == 2);
  CHECK(cli(d, "pin --counts").code == 2);
  CHECK(cli(d, "audit plan --attribute A").code == 2);
  CHECK(cli(d, "--help").code == 0);
  // Neither pair of inputs given.
  CHECK(cli(d, "consistency").code == 2);
}

TEST_CASE("pin report from counts") {
  TempDir d;
  const auto counts = d.write("counts.txt",
                              "# attribute n_differ n_n n_p n_total\n"
                              "Male 2 100 100 100\nHat 11 160 40 100\nBald 0 200 0 100\n");
  Run r = cli(d, "pin --counts " + quote(counts.string()));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out ==
        "attribute\tn_differ\tn_n\tn_p\tp_in\n"
        "Hat\t11\t160\t40\t0.344\n"
        "Male\t2\t100\t100\t0.040\n"
        "Bald\t0\t200\t0\tn/a\n");
  r = cli(d, "--format json-lines pin --counts " + quote(counts.string()) + " --exclude Hat Bald");
  const auto rows = json_lines(r.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["attribute"] == "Male");

  d.write("bad.txt", "Male 2 100 99 100\n");
  r = cli(d, "pin --counts " + quote((d / "bad.txt").string()));
  CHECK(r.code == 1);
  CHECK(r.err.find("error: PAIR_COUNT_MISMATCH") != std::string::npos);
}

TEST_CASE("consistency between two pass files") {
  TempDir d;
  const auto a = d.write("a.txt", "3\nX Y\n1.jpg 1 1\n2.jpg -1 1\n3.jpg 1 -1\n");
  const auto b = d.write("b.txt", "3\nX Y\n1.jpg 1 1\n2.jpg 1 1\n3.jpg 1 -1\n");
  const Run r = cli(d, "consistency --pass-a " + quote(a.string()) + " --pass-b " + quote(b.string()));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("X\t1\t3\t66.7%\tLOW") != std::string::npos);
  CHECK(r.out.find("Y\t0\t3\t100.0%\tHIGH") != std::string::npos);
}

TEST_CASE("project commands end to end") {
  Workspace w;
  Run r = w.run("ingest" + w.p() + "--labels " + quote((w.dir / "list_attr.txt").string()));
  CHECK(r.code == 1);
  CHECK(r.err.find("PROJECT_EXISTS") != std::string::npos);

  SUBCASE("duplicates") {
    r = w.run("dupes find" + w.p() + "--threshold 0.99");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    r = w.run("--format json-lines dupes list" + w.p());
    const auto pairs = json_lines(r.out);
    REQUIRE(pairs.size() == 100);
    const std::string id = std::to_string(pairs[0]["pair_id"].get<std::uint64_t>());
    CHECK(w.run("dupes verdict" + w.p() + "--pair " + id + " --verdict DUPLICATE --reviewer a").code == 0);
    CHECK(w.run("dupes verdict" + w.p() + "--pair " + id + " --verdict DUPLICATE --reviewer b").code == 0);
    r = w.run("dupes verdict" + w.p() + "--pair " + id + " --verdict NEAR_DUPLICATE_REJECTED --reviewer c");
    CHECK(r.code == 1);
    CHECK(r.err.find("VERDICT_CONFLICT") != std::string::npos);
    CHECK(w.run("dupes arbitrate" + w.p() + "--pair " + id + " --verdict DUPLICATE --arbiter z").code == 0);
    r = w.run("pin" + w.p());
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.rfind("attribute\tn_differ", 0) == 0);
  }

  SUBCASE("audit session") {
    r = w.run("--format json-lines audit plan" + w.p() +
              "--attribute Eyeglasses --value TRUE --min-per-value 4 --seed 2");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json plan = json_lines(r.out).at(0);
    const std::string sid = plan["session_id"];
    r = w.run("--format json-lines audit show" + w.p() + "--session " + sid);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto ids = json_lines(r.out).at(0)["sample"].get<std::vector<std::string>>();
    REQUIRE(ids.size() == 4);
    std::string a, b;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      a += ids[i] + " TRUE\n";
      b += ids[i] + (i == 0 ? " FALSE\n" : " TRUE\n");
    }
    const auto fa = w.dir.write("a.txt", a), fb = w.dir.write("b.txt", b);
    CHECK(w.run("audit label" + w.p() + "--session " + sid + " --pass a --from " + quote(fa.string())).code == 0);
    CHECK(w.run("audit label" + w.p() + "--session " + sid + " --pass b --from " + quote(fb.string())).code == 0);
    r = w.run("audit close" + w.p() + "--session " + sid);
    CHECK(r.code == 1);
    CHECK(r.err.find("UNRESOLVED_DISAGREEMENTS") != std::string::npos);
    CHECK(r.err.find(ids[0]) != std::string::npos);
    r = w.run("consistency" + w.p() + "--session " + sid);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("Eyeglasses\t1\t4\t75.0%\tLOW") != std::string::npos);
    CHECK(w.run("audit resolve" + w.p() + "--session " + sid + " --image " + ids[0] + " --value FALSE").code == 0);
    CHECK(w.run("audit close" + w.p() + "--session " + sid).code == 0);
    r = w.run("audit report" + w.p());
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("25.00%") != std::string::npos);
  }

  SUBCASE("cleaning workflow") {
    const auto cfg = w.dir.write("cfg.json", R"({"small_bin_threshold": 200})");
    r = w.run("workflow init" + w.p() + "--attribute Smiling --seed-split train --config " +
              quote(cfg.string()));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::string status = "RUNNING";
    for (int round = 0; round < 5 && status == "RUNNING"; ++round) {
      r = w.run("--format json-lines workflow step" + w.p());
      REQUIRE_MESSAGE(r.code == 0, r.err);
      const auto rows = json_lines(r.out);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::size_t votes = rows[i]["votes"];
        if (rows[i]["size"] == 0) continue;
        const std::string v = " --votes " + std::to_string(votes);
        if (votes == 0 || votes == 3) {
          const auto sample = json_lines(w.run("--format json-lines workflow sample" + w.p() + v).out);
          std::string answers;
          for (const auto& id : sample.at(0)["sample"])
            answers += id.get<std::string>() + (votes ? " TRUE\n" : " FALSE\n");
          const auto f = w.dir.write("answers.txt", answers);
          r = w.run("workflow audit" + w.p() + v + " --answers " + quote(f.string()));
          CHECK_MESSAGE(r.code == 0, r.err);
        } else {
          CHECK(w.run("workflow defer" + w.p() + v).code == 0);
        }
      }
      status = json_lines(w.run("--format json-lines workflow status" + w.p()).out).at(0)["status"];
    }
    CHECK(status == "CONVERGED");
    r = w.run("workflow step" + w.p());
    CHECK(r.code == 0);
    CHECK(r.out.find("nothing to do") != std::string::npos);
    CHECK(w.run("workflow apply" + w.p()).code == 0);
    CHECK(w.run("workflow status" + w.p() + "--workflow w9").code == 1);
  }

  const auto out = w.dir / "export" / "labels.txt";
  r = w.run("export" + w.p() + "-o " + quote(out.string()));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(out));
}
