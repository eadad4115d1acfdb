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

#include "ganwild/assist.hpp"

#include <cmath>

#include <fmt/format.h>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

constexpr std::array<const char*, kNumLandmarkCoords> kCoordNames = {
    "left_eye_x", "left_eye_y", "right_eye_x", "right_eye_y", "left_ear_x", "left_ear_y",
    "right_ear_x", "right_ear_y", "nose_x", "nose_y", "mouth_x", "mouth_y"};

}  // namespace

void AlignmentReference::validate() const {
  if (k <= 0) throw ConfigError(fmt::format("alignment k must be positive, got {}", k));
  for (std::size_t i = 0; i < kNumLandmarkCoords; ++i) {
    if (!(sigma[i] >= 0.0)) throw ConfigError(fmt::format("sigma of {} is negative", kCoordNames[i]));
    if (!(mu[i] >= 0.0 && mu[i] <= 1.0)) throw ConfigError(fmt::format("mu of {} is outside [0, 1]", kCoordNames[i]));
  }
}

Point2 AlignmentReference::expected(Landmark landmark) const {
  const auto i = 2 * static_cast<std::size_t>(landmark);
  return {mu[i], mu[i + 1]};
}

AlignmentReference fit_alignment_reference(std::span<const FaceGeometry> geometries, int k,
                                           std::string source_corpus) {
  if (geometries.empty()) throw Error("cannot fit an alignment reference to an empty geometry set");
  AlignmentReference ref;
  ref.k = k;
  ref.source_corpus = std::move(source_corpus);
  const double n = static_cast<double>(geometries.size());
  // Mean accumulated as offsets from the first geometry, so identical inputs
  // reproduce their value exactly and the variance below is exactly zero.
  const auto first = geometries.front().coordinates();
  std::array<double, kNumLandmarkCoords> offset{};
  for (const auto& g : geometries) {
    const auto c = g.coordinates();
    for (std::size_t i = 0; i < kNumLandmarkCoords; ++i) offset[i] += c[i] - first[i];
  }
  for (std::size_t i = 0; i < kNumLandmarkCoords; ++i) ref.mu[i] = first[i] + offset[i] / n;
  for (const auto& g : geometries) {
    const auto c = g.coordinates();
    for (std::size_t i = 0; i < kNumLandmarkCoords; ++i) {
      const double d = c[i] - ref.mu[i];
      ref.sigma[i] += d * d;
    }
  }
  for (auto& s : ref.sigma) s = std::sqrt(s / n);
  return ref;
}

bool is_aligned(const FaceGeometry& geometry, const AlignmentReference& ref) {
  return is_aligned(geometry, ref, static_cast<double>(ref.k));
}

bool is_aligned(const FaceGeometry& geometry, const AlignmentReference& ref, double k) {
  const auto c = geometry.coordinates();
  for (std::size_t i = 0; i < kNumLandmarkCoords; ++i) {
    if (ref.sigma[i] == 0.0) {
      if (c[i] != ref.mu[i]) return false;
    } else if (!(std::abs(c[i] - ref.mu[i]) < k * ref.sigma[i])) {
      return false;
    }
  }
  return true;
}

EyeDistance gan_eye_distance_detail(const FaceGeometry& geometry, const AlignmentReference& ref) {
  EyeDistance d;
  d.left = distance(geometry[Landmark::LEFT_EYE], ref.expected(Landmark::LEFT_EYE));
  d.right = distance(geometry[Landmark::RIGHT_EYE], ref.expected(Landmark::RIGHT_EYE));
  d.value = 0.5 * (d.left + d.right);
  return d;
}

double gan_eye_distance(const FaceGeometry& geometry, const AlignmentReference& ref) {
  return gan_eye_distance_detail(geometry, ref).value;
}

std::string alignment_reference_to_json(const AlignmentReference& ref) {
  json j{{"mu", ref.mu},
         {"sigma", ref.sigma},
         {"k", ref.k},
         {"source_corpus", ref.source_corpus},
         {"coordinate_order", kCoordNames}};
  return j.dump(2) + "\n";
}

AlignmentReference alignment_reference_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed alignment reference: {}", e.what()));
  }
  AlignmentReference ref;
  const auto mu = j.at("mu").get<std::vector<double>>();
  const auto sigma = j.at("sigma").get<std::vector<double>>();
  if (mu.size() != kNumLandmarkCoords || sigma.size() != kNumLandmarkCoords) {
    throw Error(fmt::format("alignment reference needs {} mu and sigma values", kNumLandmarkCoords));
  }
  std::copy(mu.begin(), mu.end(), ref.mu.begin());
  std::copy(sigma.begin(), sigma.end(), ref.sigma.begin());
  ref.k = j.at("k").get<int>();
  ref.source_corpus = j.value("source_corpus", std::string());
  ref.validate();
  return ref;
}

void save_alignment_reference(const fs::path& path, const AlignmentReference& ref) {
  write_file_atomic(path, alignment_reference_to_json(ref));
}

AlignmentReference load_alignment_reference(const fs::path& path) {
  return alignment_reference_from_json(read_file_text(path));
}

}  // namespace ganwild
