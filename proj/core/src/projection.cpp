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

#include "ganwild/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "ganwild/common.hpp"

namespace ganwild {

namespace {

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

struct Edge {
  std::size_t i;
  std::size_t j;
  double weight;
};

}  // namespace

std::vector<Point2d> UmapProjector::project(std::span<const std::vector<double>> points, std::uint64_t seed) const {
  const std::size_t n = points.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config_.n_neighbors)), n - 1);

  // k nearest neighbours, brute force
  std::vector<std::vector<std::pair<double, std::size_t>>> knn(n);
  std::vector<std::pair<double, std::size_t>> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.emplace_back(std::sqrt(sq_distance(points[i], points[j])), j);
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    knn[i].assign(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k));
  }

  // membership strengths
  const double target = std::log2(static_cast<double>(k));
  std::map<std::pair<std::size_t, std::size_t>, double> directed;
  for (std::size_t i = 0; i < n; ++i) {
    double rho = 0.0;
    for (const auto& [d, j] : knn[i]) {
      if (d > 0.0) {
        rho = d;
        break;
      }
    }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), sigma = 1.0;
    for (int it = 0; it < 64; ++it) {
      double psum = 0.0;
      for (const auto& [d, j] : knn[i]) psum += std::exp(-std::max(0.0, d - rho) / sigma);
      if (std::abs(psum - target) < 1e-5) break;
      if (psum > target) {
        hi = sigma;
        sigma = 0.5 * (lo + hi);
      } else {
        lo = sigma;
        sigma = std::isinf(hi) ? sigma * 2.0 : 0.5 * (lo + hi);
      }
    }
    for (const auto& [d, j] : knn[i]) directed[{i, j}] = std::exp(-std::max(0.0, d - rho) / sigma);
  }
  std::vector<Edge> edges;
  for (const auto& [key, w] : directed) {
    const auto [i, j] = key;
    const auto rev = directed.find({j, i});
    const double wr = rev == directed.end() ? 0.0 : rev->second;
    if (rev != directed.end() && j < i) continue;  // pair already emitted
    edges.push_back({i, j, w + wr - w * wr});
  }
  double max_w = 0.0;
  for (const auto& e : edges) max_w = std::max(max_w, e.weight);

  Rng rng(seed);
  std::vector<Point2d> y(n);
  for (auto& p : y) p = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};

  const double a = config_.a;
  const double b = config_.b;
  std::vector<double> every(edges.size()), next(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    every[e] = edges[e].weight > 0.0 ? max_w / edges[e].weight : -1.0;
    next[e] = every[e];
  }
  for (int epoch = 0; epoch < config_.n_epochs; ++epoch) {
    const double alpha = config_.learning_rate * (1.0 - static_cast<double>(epoch) / config_.n_epochs);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (every[e] <= 0.0 || next[e] > epoch + 1) continue;
      const std::size_t i = edges[e].i;
      const std::size_t j = edges[e].j;
      {
        const double dx = y[i][0] - y[j][0];
        const double dy = y[i][1] - y[j][1];
        const double d2 = dx * dx + dy * dy;
        if (d2 > 0.0) {
          const double coef = -2.0 * a * b * std::pow(d2, b - 1.0) / (1.0 + a * std::pow(d2, b));
          const double gx = clip(coef * dx) * alpha;
          const double gy = clip(coef * dy) * alpha;
          y[i][0] += gx;
          y[i][1] += gy;
          y[j][0] -= gx;
          y[j][1] -= gy;
        }
      }
      for (int s = 0; s < config_.negative_samples; ++s) {
        const auto m = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        if (m == i) continue;
        const double dx = y[i][0] - y[m][0];
        const double dy = y[i][1] - y[m][1];
        const double d2 = dx * dx + dy * dy;
        const double coef = 2.0 * b / ((0.001 + d2) * (1.0 + a * std::pow(d2, b)));
        y[i][0] += (coef > 0.0 ? clip(coef * dx) : 4.0) * alpha;
        y[i][1] += (coef > 0.0 ? clip(coef * dy) : 4.0) * alpha;
      }
      next[e] += every[e];
    }
  }
  return y;
}

std::vector<ProjectedPoint> project2d(std::span<const std::string> ids, std::span<const std::vector<double>> vectors,
                                      const Projector& projector, std::uint64_t seed) {
  if (vectors.size() < 2) throw Error("projection needs at least two points");
  if (ids.size() != vectors.size()) throw Error("projection ids and vectors differ in length");
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size() || v.empty()) throw Error("projection input vectors differ in dimension");
  }
  const auto coords = projector.project(vectors, seed);
  std::vector<ProjectedPoint> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], coords[i][0], coords[i][1]});
  return out;
}

std::string projection_csv(std::span<const ProjectedPoint> points) {
  std::string out = "id,x,y\n";
  for (const auto& p : points) out += fmt::format("{},{:.6f},{:.6f}\n", p.id, p.x, p.y);
  return out;
}

}  // namespace ganwild
