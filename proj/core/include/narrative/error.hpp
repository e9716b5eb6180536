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

#ifndef NARRATIVE_ERROR_HPP_
#define NARRATIVE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace narrative {

enum class ErrorCode {
  kValidation,
  kIo,
  kInfeasible,
  kTimeout,
  kNotFound,
  kNoCorpus,
  kInternal,
};

// Stable machine-readable name, e.g. "validation".
std::string_view to_string(ErrorCode code);

// Single exception type for the library. `detail` carries structured
// context (offending ids, infeasibility reports, incumbents).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json detail = nlohmann::json::object());

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  // {code, message, detail}
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace narrative

#endif  // NARRATIVE_ERROR_HPP_
