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

#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "narrative/service.hpp"
#include "narrative/synth.hpp"

namespace narrative::service {
namespace {

using nlohmann::json;

class ApiTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    synth::SynthConfig cfg;
    cfg.n = 40;
    cfg.c = 3;
    cfg.d = 8;
    cfg.timeline_lengths = {4};
    auto s = synth::generate(cfg);
    s.corpus.records[3].file_ref = "img3.jpg";
    s.corpus.records[4].file_ref = "missing.jpg";
    dir_ = new testing::TempDir();
    std::ofstream(dir_->path() / "img3.jpg", std::ios::binary) << "JPEGDATA";
    ServiceConfig sc;
    sc.spread.knn_k = 5;
    sc.page_size = 10;
    api_ = new Api(sc);
    api_->load(std::move(s.corpus), dir_->path());
  }
  static void TearDownTestSuite() {
    delete api_;
    delete dir_;
  }
  static Response get(const std::string& path, const Query& q = {}) {
    return api_->handle("GET", path, q, "");
  }
  static Response post(const std::string& path, const json& body) {
    return api_->handle("POST", path, {}, body.dump());
  }
  static Api* api_;
  static testing::TempDir* dir_;
};

Api* ApiTest::api_ = nullptr;
testing::TempDir* ApiTest::dir_ = nullptr;

TEST_F(ApiTest, ImagesPaginateAndFilter) {
  auto r = get("/api/images");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["total"], 40);
  EXPECT_EQ(r.body["items"].size(), 10u);
  std::vector<std::string> ordered;
  for (int page = 0; page < 4; ++page) {
    const auto resp = get("/api/images", {{"page", std::to_string(page)}});
    for (const auto& item : resp.body["items"]) ordered.push_back(item["id"]);
  }
  ASSERT_EQ(ordered.size(), 40u);
  for (std::size_t k = 1; k < ordered.size(); ++k) EXPECT_NE(ordered[k - 1], ordered[k]);
  EXPECT_EQ(ordered.front(), "img_0000");
  EXPECT_EQ(ordered.back(), "img_0039");
  EXPECT_TRUE(get("/api/images", {{"page", "4"}}).body["items"].empty());
  r = get("/api/images", {{"category", "cluster_01"}});
  for (const auto& item : r.body["items"]) EXPECT_EQ(item["category"], "cluster_01");
  EXPECT_GT(r.body["total"].get<int>(), 0);
  r = get("/api/images", {{"from", "2000-02-01"}, {"to", "2000-02-10"}});
  for (const auto& item : r.body["items"]) {
    EXPECT_GE(item["date"].get<std::string>(), "2000-02-01");
    EXPECT_LE(item["date"].get<std::string>(), "2000-02-10");
  }
  EXPECT_EQ(get("/api/images", {{"page", "zero"}}).status, 400);
  EXPECT_EQ(get("/api/images", {{"page_size", "0"}}).status, 400);
  EXPECT_EQ(get("/api/images", {{"colour", "red"}}).status, 400);
}

TEST_F(ApiTest, ImageFiles) {
  const auto ok = get("/api/images/img_0003/file");
  ASSERT_EQ(ok.status, 200);
  EXPECT_EQ(ok.raw, "JPEGDATA");
  EXPECT_EQ(get("/api/images/img_0004/file").status, 404);
  EXPECT_EQ(get("/api/images/img_0005/file").status, 404);
  EXPECT_EQ(get("/api/images/ghost/file").status, 404);
}

TEST_F(ApiTest, Clusters) {
  const auto r = get("/api/clusters");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["categories"].size(), 3u);
  int total = 0;
  for (const auto& c : r.body["categories"]) total += c["count"].get<int>();
  EXPECT_EQ(total, 40);
  EXPECT_EQ(r.body["distribution"].size(), 40u);
}

TEST_F(ApiTest, GraphIsCachedAndDeterministic) {
  const auto a = get("/api/graph", {{"space", "high"}});
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, get("/api/graph", {{"space", "high"}}).body);
  const auto w = get("/api/graph", {{"space", "high"}, {"itf", "true"}});
  EXPECT_TRUE(w.body["itf_applied"].get<bool>());
  EXPECT_EQ(get("/api/graph", {{"space", "nowhere"}}).status, 400);
}

TEST_F(ApiTest, ExtractAndHistory) {
  const json req{{"source_id", "img_0000"}, {"target_id", "img_0039"}, {"k", 4},
                 {"mincover", 1.0}};
  const auto r = post("/api/extract", req);
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["main_route"].size(), 4u);
  EXPECT_EQ(r.body["main_route"][0], "img_0000");
  EXPECT_GE(r.body["covered_clusters"].size(), 3u);
  const auto h = get("/api/history");
  ASSERT_GE(h.body["extractions"].size(), 1u);
  EXPECT_EQ(h.body["extractions"].back()["main_route"], r.body["main_route"]);
}

TEST_F(ApiTest, ExtractErrorStatuses) {
  json bad{{"source_id", "img_0000"}, {"target_id", "img_0039"}, {"k", 1}};
  auto r = post("/api/extract", bad);
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["code"], "validation");
  r = post("/api/extract", {{"source_id", "img_0000"}, {"target_id", "img_0039"}, {"k", 400}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["code"], "infeasible");
  EXPECT_EQ(r.body["detail"]["constraint"], "length");
  EXPECT_EQ(api_->handle("POST", "/api/extract", {}, "{oops").status, 400);
  EXPECT_EQ(post("/api/extract", {{"source_id", "a"}, {"bogus", 1}}).status, 400);
}

TEST_F(ApiTest, Feasibility) {
  const auto r = post("/api/feasibility",
                      {{"source_id", "img_0000"}, {"target_id", "img_0039"}, {"k", 400}});
  ASSERT_EQ(r.status, 200);
  EXPECT_FALSE(r.body["feasible"].get<bool>());
  EXPECT_EQ(r.body["failed_constraint"], "length");
}

TEST_F(ApiTest, Evaluate) {
  const auto r = post("/api/evaluate", {{"timeline", {"img_0000", "img_0010", "img_0039"}},
                                        {"baseline", {"img_0000", "img_0020", "img_0039"}}});
  ASSERT_EQ(r.status, 200);
  EXPECT_GE(r.body["distance"].get<double>(), 0.0);
  EXPECT_EQ(r.body["path"][0], json::array({0, 0}));
  const auto bad = post("/api/evaluate", {{"timeline", {"ghost"}}, {"baseline", {"img_0000"}}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body["detail"]["unknown_ids"][0], "ghost");
}

TEST_F(ApiTest, RoutingAndPreflight) {
  EXPECT_EQ(get("/api/nothing").status, 404);
  EXPECT_EQ(api_->handle("DELETE", "/api/images", {}, "").status, 404);
  EXPECT_EQ(api_->handle("OPTIONS", "/api/extract", {}, "").status, 204);
}

TEST(Api, UnloadedCorpus) {
  Api api;
  EXPECT_FALSE(api.loaded());
  const auto r = api.handle("GET", "/api/images", {}, "");
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(r.body["code"], "no_corpus");
}

TEST(StatusFor, Mapping) {
  EXPECT_EQ(status_for(ErrorCode::kValidation), 400);
  EXPECT_EQ(status_for(ErrorCode::kNotFound), 404);
  EXPECT_EQ(status_for(ErrorCode::kInfeasible), 422);
  EXPECT_EQ(status_for(ErrorCode::kTimeout), 504);
  EXPECT_EQ(status_for(ErrorCode::kInternal), 500);
  EXPECT_EQ(status_for(ErrorCode::kIo), 500);
}

}  // namespace
}  // namespace narrative::service
