/* Copyright 2026 The ganwild Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GANWILD_SCORES_HPP_
#define GANWILD_SCORES_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ganwild/common.hpp"

namespace ganwild {

// Detector output for one image under one model; higher means more fake.
struct ScoreRecord {
  std::string image_id;
  std::string model_id;
  double score = 0.0;
  Timestamp scored_at{};

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

std::string score_to_json_line(const ScoreRecord& record);
ScoreRecord score_from_json_line(std::string_view line);
std::vector<ScoreRecord> read_score_log(const fs::path& path);
void write_score_log(const fs::path& path, std::span<const ScoreRecord> records);

}  // namespace ganwild

#endif  // GANWILD_SCORES_HPP_
