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

#include <gtest/gtest.h>

#include "narrative/error.hpp"
#include "narrative/report.hpp"

namespace narrative::evaluate {
namespace {

ExperimentReport sample_report() {
  ExperimentReport r;
  r.config.trials = 3;
  ExperimentCell a;
  a.length = 10;
  a.space = "high";
  a.trials = 3;
  a.nm_distance = {1.25, 0.1, 3};
  a.rs_distance = {2.0 / 3.0, 0.3333333333333333, 3};
  a.nm_similarity = {0.9, 0.0, 3};
  a.rs_similarity = {0.8, 0.05, 3};
  a.nm_coherence = {0.7, 0.01, 3};
  a.rs_coherence = {0.5, 0.02, 3};
  a.p_distance = 1.2345678901234567e-9;
  a.p_similarity = 0.03;
  ExperimentCell b = a;
  b.space = "low";
  b.failures = 1;
  b.failure_reasons = {"trial 2: infeasible: no route"};
  b.nm_distance.count = 2;
  b.p_coherence.reset();
  b.p_distance.reset();
  r.cells = {a, b};
  return r;
}

TEST(Report, CsvRoundTripIsExact) {
  const auto r = sample_report();
  auto cells = cells_from_csv(render_csv(r));
  ASSERT_EQ(cells.size(), 2u);
  for (auto& c : cells) c.failure_reasons.clear();
  auto expected = r.cells;
  for (auto& c : expected) c.failure_reasons.clear();
  EXPECT_EQ(cells, expected);
}

TEST(Report, JsonRoundTrip) {
  const auto r = sample_report();
  const auto back = report_from_json(report_to_json(r));
  EXPECT_EQ(back.cells, r.cells);
  EXPECT_EQ(report_to_json(back), report_to_json(r));
}

TEST(Report, MarkdownLayout) {
  const auto md = render_markdown(sample_report());
  EXPECT_NE(md.find("High-Dim Similarity NM"), std::string::npos);
  EXPECT_NE(md.find("Low-Dim Distance p"), std::string::npos);
  EXPECT_NE(md.find("1.250 ± 0.100"), std::string::npos);
  EXPECT_NE(md.find("n/a"), std::string::npos);
  EXPECT_NE(md.find("trial 2: infeasible"), std::string::npos);
}

TEST(Report, EmptyReportIsHeaderOnly) {
  ExperimentReport r;
  const auto md = render_markdown(r);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 2);
  const auto csv = render_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_TRUE(cells_from_csv(csv).empty());
}

TEST(Report, RenderingIsDeterministic) {
  const auto r = sample_report();
  for (auto f : {ReportFormat::kMarkdown, ReportFormat::kCsv, ReportFormat::kJson}) {
    EXPECT_EQ(render_report(r, f), render_report(r, f));
  }
  EXPECT_EQ(report_format_from_string("md"), ReportFormat::kMarkdown);
  EXPECT_EQ(report_format_from_string("csv"), ReportFormat::kCsv);
  EXPECT_THROW(report_format_from_string("xlsx"), Error);
}

TEST(Report, MalformedCsvRejected) {
  EXPECT_THROW(cells_from_csv("length,space\n1\n"), Error);
}

}  // namespace
}  // namespace narrative::evaluate
