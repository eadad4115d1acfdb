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

#ifndef GANWILD_ASSIST_HPP_
#define GANWILD_ASSIST_HPP_

#include <array>
#include <span>
#include <string>

#include "ganwild/facegate.hpp"

namespace ganwild {

// Per-coordinate landmark statistics of a fake reference set. Coordinate i
// follows FaceGeometry::coordinates() order.
struct AlignmentReference {
  std::array<double, kNumLandmarkCoords> mu{};
  std::array<double, kNumLandmarkCoords> sigma{};
  int k = 7;
  std::string source_corpus;

  void validate() const;
  Point2 expected(Landmark landmark) const;
};

inline constexpr int kDefaultAlignmentK = 7;
inline constexpr double kGanEyeDistanceThreshold = 0.02;

// Mean and population standard deviation per coordinate. Throws Error on
// empty input.
AlignmentReference fit_alignment_reference(std::span<const FaceGeometry> geometries, int k = kDefaultAlignmentK,
                                           std::string source_corpus = {});

// |L_i - mu_i| < k * sigma_i for every coordinate; a coordinate with
// sigma_i == 0 must equal mu_i.
bool is_aligned(const FaceGeometry& geometry, const AlignmentReference& ref);
bool is_aligned(const FaceGeometry& geometry, const AlignmentReference& ref, double k);

struct EyeDistance {
  double left = 0.0;
  double right = 0.0;
  double value = 0.0;  // mean of left and right
};

// Eye displacement from the reference means, in normalized coordinates.
EyeDistance gan_eye_distance_detail(const FaceGeometry& geometry, const AlignmentReference& ref);
double gan_eye_distance(const FaceGeometry& geometry, const AlignmentReference& ref);

// alignment_ref.json
std::string alignment_reference_to_json(const AlignmentReference& ref);
AlignmentReference alignment_reference_from_json(std::string_view text);
void save_alignment_reference(const fs::path& path, const AlignmentReference& ref);
AlignmentReference load_alignment_reference(const fs::path& path);

}  // namespace ganwild

#endif  // GANWILD_ASSIST_HPP_
