// Copyright 2026 The Narrative Maps Authors
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

#include <sys/wait.h>

#include <fstream>
#include <iterator>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "narrative/corpus.hpp"
#include "narrative/service.hpp"

#ifndef NARREX_PATH
#error "NARREX_PATH must name the narrex executable"
#endif

namespace narrative {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliRun {
  int status = -1;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    ASSERT_EQ(exec("synth --seed 2 --out " + at("s")).status, 0);
    ASSERT_EQ(exec("propagate --corpus " + at("s") + " --out " + at("p")).status, 0);
  }
  static void TearDownTestSuite() { delete dir_; }

  static std::string at(const std::string& rel) { return (dir_->path() / rel).string(); }

  static CliRun exec(const std::string& args, const std::string& env = "") {
    const std::string out = at("stdout.txt"), err = at("stderr.txt");
    const std::string cmd = env + " \"" NARREX_PATH "\" " + args + " > \"" + out + "\" 2> \"" +
                            err + "\"";
    CliRun r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static testing::TempDir* dir_;
};

testing::TempDir* Cli::dir_ = nullptr;

TEST_F(Cli, HelpListsEveryField) {
  const auto r = exec("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* key : {"alpha", "tol", "max_iter", "knn_k", "sigma", "location_weight",
                          "coherence_mode", "window_days", "top_k_out", "mincover", "k", "itf",
                          "trials", "lengths", "spaces", "seed", "timeout_seconds",
                          "tie_break_seed", "synth_noise_sigma", "port"}) {
    EXPECT_NE(r.out.find("  " + std::string(key) + " "), std::string::npos) << key;
  }
}

TEST_F(Cli, ExtractPrintsRouteAndWritesMap) {
  const auto r = exec("extract --corpus " + at("p") + " --source img_0000 --target img_0199 --k 10 --out " +
                      at("e1"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto map = json::parse(slurp(at("e1/map.json")));
  std::string lines;
  for (const auto& id : map["main_route"]) lines += id.get<std::string>() + "\n";
  EXPECT_EQ(r.out, lines);
  EXPECT_EQ(map["main_route"].size(), 10u);
  EXPECT_TRUE(fs::exists(at("e1/extract.log")));
}

TEST_F(Cli, ApiExtractionMatchesCli) {
  ASSERT_EQ(exec("extract --corpus " + at("p") +
                 " --source img_0000 --target img_0199 --k 12 --mincover 0.6 --out " + at("e2"))
                .status,
            0);
  service::Api api;
  api.load(corpus::load_corpus(at("p/manifest.json")), at("p"));
  const json req{{"source_id", "img_0000"}, {"target_id", "img_0199"}, {"k", 12}, {"mincover", 0.6}};
  const auto first = api.handle("POST", "/api/extract", {}, req.dump());
  const auto second = api.handle("POST", "/api/extract", {}, req.dump());
  ASSERT_EQ(first.status, 200);
  EXPECT_EQ(first.body, json::parse(slurp(at("e2/map.json"))));
  EXPECT_EQ(first.body, second.body);
}

TEST_F(Cli, InfeasibleExitsThreeWithJson) {
  const auto r = exec("extract --corpus " + at("p") + " --source img_0000 --target img_0199 --k 900 --out " +
                      at("e3"));
  EXPECT_EQ(r.status, 3);
  const auto err = json::parse(r.err);
  EXPECT_EQ(err["code"], "infeasible");
  EXPECT_EQ(err["detail"]["constraint"], "length");
}

TEST_F(Cli, ValidationAndIoExitCodes) {
  EXPECT_EQ(exec("extract --corpus " + at("p") + " --source img_0000 --target img_0199 --k 5 "
                 "--set alpha=7 --out " + at("e4")).status,
            2);
  EXPECT_EQ(exec("extract --corpus " + at("p") + " --source img_0000 --target img_0199 --k 5 "
                 "--set nonsense=1 --out " + at("e4")).status,
            2);
  EXPECT_EQ(exec("extract --corpus " + at("s") + " --source img_0000 --target img_0199 --k 5 "
                 "--out " + at("e4")).status,
            2);  // unpropagated
  EXPECT_EQ(exec("propagate --corpus " + at("nowhere") + " --out " + at("x")).status, 4);
  EXPECT_EQ(exec("bogus-subcommand").status, 2);
  const auto r = exec("extract --corpus " + at("p") + " --source ghost --target img_0199 --k 5 --out " + at("e4"));
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["code"], "validation");
}

TEST_F(Cli, ConfigFileFromEnvAndFlagsWin) {
  std::ofstream(at("run.json")) << R"({"k": 11, "mincover": 0.4})";
  ASSERT_EQ(exec("extract --corpus " + at("p") + " --source img_0000 --target img_0199 --out " + at("e5"),
                 "NARREX_CONFIG=\"" + at("run.json") + "\"")
                .status,
            0);
  auto map = json::parse(slurp(at("e5/map.json")));
  EXPECT_EQ(map["main_route"].size(), 11u);
  EXPECT_EQ(map["params"]["mincover"], 0.4);
  ASSERT_EQ(exec("extract --corpus " + at("p") + " --source img_0000 --target img_0199 --k 13 --out " +
                     at("e6"),
                 "NARREX_CONFIG=\"" + at("run.json") + "\"")
                .status,
            0);
  map = json::parse(slurp(at("e6/map.json")));
  EXPECT_EQ(map["main_route"].size(), 13u);
}

TEST_F(Cli, EvaluateWritesSixRowsPerSpace) {
  ASSERT_EQ(exec("evaluate --corpus " + at("p") + " --baselines " + at("s/baselines.json") +
                 " --trials 3 --out " + at("r"))
                .status,
            0);
  const auto csv = slurp(at("r/report.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 12);
  EXPECT_EQ(json::parse(slurp(at("r/report.json")))["cells"].size(), 12u);
  EXPECT_TRUE(fs::exists(at("r/report.md")));
}

TEST_F(Cli, SubcommandsAreIdempotent) {
  for (const char* name : {"a", "b"}) {
    const std::string o = at(std::string("idem_") + name);
    ASSERT_EQ(exec("synth --seed 4 --n 80 --out " + o + "/s").status, 0);
    ASSERT_EQ(exec("ingest --manifest " + o + "/s/manifest.json --out " + o + "/i").status, 0);
    ASSERT_EQ(exec("propagate --corpus " + o + "/i --out " + o + "/p").status, 0);
    ASSERT_EQ(exec("graph --corpus " + o + "/p --out " + o + "/g").status, 0);
    ASSERT_EQ(exec("extract --corpus " + o + "/p --graph " + o + "/g/graph.json --source img_0000 "
                   "--target img_0079 --k 6 --out " + o + "/e").status,
              0);
  }
  for (const char* f : {"s/manifest.json", "s/high.nfem", "s/low.nfem", "s/baselines.json",
                        "s/synth.log", "i/manifest.json", "i/ingest.log", "p/manifest.json",
                        "p/clusters.nfem", "p/propagate.log", "g/graph.json", "g/graph.log",
                        "e/map.json", "e/extract.log"}) {
    const auto a = slurp(at(std::string("idem_a/") + f)), b = slurp(at(std::string("idem_b/") + f));
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, b) << f;
  }
}

TEST_F(Cli, ZeroNoiseRouteIsStageOrdered) {
  ASSERT_EQ(exec("synth --noise-sigma 0 --out " + at("z/s")).status, 0);
  ASSERT_EQ(exec("propagate --corpus " + at("z/s") + " --out " + at("z/p")).status, 0);
  const auto r = exec("extract --corpus " + at("z/p") +
                      " --source img_0000 --target img_0199 --k 5 --mincover 1 "
                      "--set top_k_out=null --out " + at("z/e"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "img_0000\nimg_0040\nimg_0080\nimg_0120\nimg_0199\n");
}

}  // namespace
}  // namespace narrative
