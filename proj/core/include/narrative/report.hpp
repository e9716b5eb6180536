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

#ifndef NARRATIVE_REPORT_HPP_
#define NARRATIVE_REPORT_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/experiment.hpp"

namespace narrative::evaluate {

enum class ReportFormat { kMarkdown, kCsv, kJson };

ReportFormat report_format_from_string(const std::string& name);

// One row per length; per space, NM / RS / p for similarity and distance.
std::string render_markdown(const ExperimentReport& report);
// Long format: one row per (length, space) with every numeric field.
std::string render_csv(const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report);
std::string render_report(const ExperimentReport& report, ReportFormat format);

std::vector<ExperimentCell> cells_from_csv(const std::string& text);
ExperimentReport report_from_json(const nlohmann::json& doc);

}  // namespace narrative::evaluate

#endif  // NARRATIVE_REPORT_HPP_
