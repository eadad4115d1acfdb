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

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ganwild/calibrate.hpp"
#include "ganwild/common.hpp"
#include "ganwild/dedup.hpp"
#include "ganwild/synth.hpp"

namespace ganwild {
namespace {

void BM_PhashBits(benchmark::State& state) {
  const cv::Mat img = render_synthetic(SynthKind::PHOTO, static_cast<int>(state.range(0)), 7).image;
  for (auto _ : state) benchmark::DoNotOptimize(phash_bits(img));
}
BENCHMARK(BM_PhashBits)->Arg(64)->Arg(256)->Arg(1024);

// Near-duplicate groups buried in random hashes.
std::vector<PerceptualHash> corpus(std::size_t n) {
  Rng rng(11);
  std::vector<PerceptualHash> out;
  while (out.size() < n) {
    const std::uint64_t base = rng.next_u64();
    const int copies = static_cast<int>(rng.uniform_int(1, 6));
    for (int i = 0; i < copies && out.size() < n; ++i) {
      std::uint64_t h = base;
      for (int b = static_cast<int>(rng.uniform_int(0, 3)); b > 0; --b) h ^= std::uint64_t{1} << rng.uniform_int(0, 63);
      out.push_back({std::to_string(out.size()), h});
    }
  }
  return out;
}

void BM_Cluster(benchmark::State& state) {
  const auto hashes = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cluster(hashes));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Cluster)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMillisecond);

void BM_ChooseThreshold(benchmark::State& state) {
  Rng rng(13);
  std::vector<LabeledScore> scores;
  for (int i = 0; i < state.range(0); ++i) {
    const bool fake = rng.bernoulli(0.3);
    scores.push_back({std::to_string(i), fake ? rng.uniform(0.3, 1.0) : rng.uniform(0.0, 0.7),
                      fake ? Label::FAKE : Label::REAL});
  }
  for (auto _ : state) benchmark::DoNotOptimize(choose_threshold(scores));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ChooseThreshold)->RangeMultiplier(8)->Range(64, 32768);

}  // namespace
}  // namespace ganwild

BENCHMARK_MAIN();
