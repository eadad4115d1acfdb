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

#ifndef GANWILD_PROJECTION_HPP_
#define GANWILD_PROJECTION_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ganwild {

using Point2d = std::array<double, 2>;

class Projector {
 public:
  virtual ~Projector() = default;
  // One 2-D point per input row; deterministic for a given seed.
  virtual std::vector<Point2d> project(std::span<const std::vector<double>> points, std::uint64_t seed) const = 0;
};

// Fuzzy k-nearest-neighbour graph with per-point bandwidths, embedded by
// negative-sampling SGD on the curve 1 / (1 + a d^(2b)). Random uniform
// initialization.
struct UmapConfig {
  int n_neighbors = 15;
  int n_epochs = 200;
  int negative_samples = 5;
  double learning_rate = 1.0;
  // Curve parameters for min_dist 0.1, spread 1.
  double a = 1.577;
  double b = 0.8951;
};

class UmapProjector final : public Projector {
 public:
  explicit UmapProjector(UmapConfig config = {}) : config_(config) {}
  std::vector<Point2d> project(std::span<const std::vector<double>> points, std::uint64_t seed) const override;

 private:
  UmapConfig config_;
};

struct ProjectedPoint {
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

// Throws Error for fewer than two points or ragged input.
std::vector<ProjectedPoint> project2d(std::span<const std::string> ids, std::span<const std::vector<double>> vectors,
                                      const Projector& projector, std::uint64_t seed);

std::string projection_csv(std::span<const ProjectedPoint> points);

}  // namespace ganwild

#endif  // GANWILD_PROJECTION_HPP_
