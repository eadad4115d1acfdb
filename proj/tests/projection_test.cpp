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

#include <gtest/gtest.h>

#include <cmath>

#include "ganwild/common.hpp"
#include "ganwild/projection.hpp"

namespace ganwild {
namespace {

std::vector<std::vector<double>> blobs(Rng& rng, int groups, int per_group, int dim) {
  std::vector<std::vector<double>> out;
  for (int g = 0; g < groups; ++g) {
    for (int i = 0; i < per_group; ++i) {
      std::vector<double> v(static_cast<std::size_t>(dim));
      for (int d = 0; d < dim; ++d) v[d] = (d == g ? 10.0 : 0.0) + rng.normal(0.0, 0.3);
      out.push_back(v);
    }
  }
  return out;
}

TEST(Umap, DeterministicPerSeed) {
  Rng rng(61);
  const auto pts = blobs(rng, 3, 20, 8);
  UmapConfig cfg;
  cfg.n_epochs = 50;
  const UmapProjector p(cfg);
  const auto a = p.project(pts, 7);
  EXPECT_EQ(a, p.project(pts, 7));
  EXPECT_NE(a, p.project(pts, 8));
  for (const auto& q : a) EXPECT_TRUE(std::isfinite(q[0]) && std::isfinite(q[1]));
}

TEST(Umap, SeparatesBlobs) {
  Rng rng(62);
  const int groups = 3, per = 30;
  const auto pts = blobs(rng, groups, per, 10);
  const auto y = UmapProjector().project(pts, 1);
  ASSERT_EQ(y.size(), pts.size());
  auto dist = [&](std::size_t i, std::size_t j) { return std::hypot(y[i][0] - y[j][0], y[i][1] - y[j][1]); };
  double within = 0, between = 0;
  int nw = 0, nb = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      if (i / per == j / per) within += dist(i, j), ++nw;
      else between += dist(i, j), ++nb;
    }
  }
  EXPECT_GT(between / nb, 3.0 * (within / nw));
  // Nearest neighbour in the embedding shares the blob.
  int agree = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (j != i && dist(i, j) < dist(i, best)) best = j;
    }
    agree += i / per == best / per;
  }
  EXPECT_GE(agree, static_cast<int>(y.size()) * 95 / 100);
}

TEST(Project2d, IdsCsvAndErrors) {
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<std::vector<double>> v{{0, 0}, {1, 0}, {0, 1}};
  UmapConfig cfg;
  cfg.n_epochs = 10;
  const auto out = project2d(ids, v, UmapProjector(cfg), 3);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[2].id, "c");
  EXPECT_EQ(projection_csv(out).rfind("id,x,y\n", 0), 0u);
  EXPECT_THROW(project2d(std::vector<std::string>{"a"}, std::vector<std::vector<double>>{{1.0}}, UmapProjector(), 0),
               Error);
  const std::vector<std::vector<double>> ragged{{0, 0}, {1}, {0, 1}};
  EXPECT_THROW(project2d(ids, ragged, UmapProjector(), 0), Error);
}

}  // namespace
}  // namespace ganwild
