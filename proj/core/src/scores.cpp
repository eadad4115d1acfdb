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

#include "ganwild/scores.hpp"

#include <sstream>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

std::string score_to_json_line(const ScoreRecord& r) {
  return json{{"image_id", r.image_id},
              {"model_id", r.model_id},
              {"score", r.score},
              {"scored_at", format_timestamp(r.scored_at)}}
      .dump();
}

ScoreRecord score_from_json_line(std::string_view line) {
  const json j = json::parse(line);
  ScoreRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.score = j.at("score").get<double>();
  r.scored_at = parse_timestamp(j.at("scored_at").get<std::string>());
  return r;
}

std::vector<ScoreRecord> read_score_log(const fs::path& path) {
  std::vector<ScoreRecord> out;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(score_from_json_line(line));
  }
  return out;
}

void write_score_log(const fs::path& path, std::span<const ScoreRecord> records) {
  std::string text;
  for (const auto& r : records) {
    text += score_to_json_line(r);
    text += '\n';
  }
  write_file_atomic(path, text);
}

}  // namespace ganwild
