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

#include <algorithm>

#include <opencv2/imgproc.hpp>

#include "ganwild/dedup.hpp"
#include "ganwild/image.hpp"
#include "ganwild/synth.hpp"
#include "oracles.hpp"

namespace ganwild {
namespace {

std::uint64_t flip_bits(Rng& rng, std::uint64_t x, int count) {
  for (int i = 0; i < count; ++i) x ^= std::uint64_t{1} << rng.uniform_int(0, 63);
  return x;
}

// Planted near-duplicate groups plus background noise. With `narrow`, all
// points live in the low 10 bits so neighbourhoods overlap heavily and border
// points are common.
std::vector<std::uint64_t> random_corpus(Rng& rng, bool narrow) {
  std::vector<std::uint64_t> pts;
  const int groups = static_cast<int>(rng.uniform_int(1, 8));
  for (int g = 0; g < groups; ++g) {
    const std::uint64_t base = rng.next_u64();
    const int size = static_cast<int>(rng.uniform_int(1, 12));
    for (int i = 0; i < size; ++i) pts.push_back(flip_bits(rng, base, static_cast<int>(rng.uniform_int(0, 4))));
  }
  const int noise = static_cast<int>(rng.uniform_int(0, 30));
  for (int i = 0; i < noise; ++i) pts.push_back(rng.next_u64());
  if (narrow) {
    for (auto& p : pts) p &= 0x3ff;
  }
  rng.shuffle(pts);
  std::sort(pts.begin(), pts.end());
  return pts;
}

TEST(Dbscan, MatchesBruteForceOracle) {
  Rng rng(31);
  int with_border = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto pts = random_corpus(rng, trial % 2 == 1);
    const int eps = static_cast<int>(rng.uniform_int(0, 6));
    const int min_samples = static_cast<int>(rng.uniform_int(1, 5));
    const auto got = dbscan_hamming(pts, eps, min_samples);
    const auto want = oracle::dbscan(pts, eps, min_samples);
    ASSERT_EQ(got, want) << "trial " << trial << " eps " << eps << " min " << min_samples;
    // Count trials where some clustered point is not core.
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int n = 0;
      for (auto q : pts) n += oracle::hamming(pts[i], q) <= eps;
      if (want[i] >= 0 && n < min_samples) {
        ++with_border;
        break;
      }
    }
  }
  EXPECT_GT(with_border, 10);
}

TEST(Dbscan, MinSamplesOneMakesEveryPointCore) {
  const std::vector<std::uint64_t> pts{0, 1, 0xff00, 0xff01, 0xffffffff};
  const auto labels = dbscan_hamming(pts, 1, 1);
  EXPECT_EQ(labels, (std::vector<int>{0, 0, 1, 1, 2}));
}

TEST(Dbscan, ChainsThroughCorePoints) {
  // 0b0000 - 0b0001 - 0b0011 - 0b0111: each step is distance 1.
  const std::vector<std::uint64_t> pts{0b0000, 0b0001, 0b0011, 0b0111};
  EXPECT_EQ(dbscan_hamming(pts, 1, 2), (std::vector<int>{0, 0, 0, 0}));
  EXPECT_EQ(dbscan_hamming(pts, 1, 3), (std::vector<int>{0, 0, 0, 0}));
  EXPECT_EQ(dbscan_hamming(pts, 0, 2), (std::vector<int>{kNoise, kNoise, kNoise, kNoise}));
}

TEST(HammingIndex, RadiusMatchesScan) {
  Rng rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pts = random_corpus(rng, trial % 3 == 0);
    const int eps = static_cast<int>(rng.uniform_int(0, 10));
    const HammingIndex index(pts, eps);
    for (int q = 0; q < 20; ++q) {
      const std::uint64_t query = q % 2 ? pts[rng.uniform_int(0, static_cast<std::int64_t>(pts.size()) - 1)] : rng.next_u64();
      std::vector<std::size_t> want;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (oracle::hamming(query, pts[i]) <= eps) want.push_back(i);
      }
      EXPECT_EQ(index.radius(query), want);
    }
  }
}

TEST(Phash, UniformImages) {
  EXPECT_EQ(phash_bits(cv::Mat(40, 50, CV_8UC3, cv::Scalar(120, 30, 200))), 0x8000000000000000ULL);
  EXPECT_EQ(phash_bits(cv::Mat(64, 64, CV_8UC3, cv::Scalar(255, 255, 255))), 0x8000000000000000ULL);
  EXPECT_EQ(phash_bits(cv::Mat(64, 64, CV_8UC3, cv::Scalar(0, 0, 0))), 0u);
  EXPECT_EQ(phash_bits(cv::Mat(64, 64, CV_8UC1, cv::Scalar(9))), 0x8000000000000000ULL);
}

TEST(Phash, StableUnderRecompressionAndResize) {
  int stable = 0, total = 0;
  long far = 0;
  std::vector<std::uint64_t> hashes;
  for (int seed = 0; seed < 60; ++seed) {
    const cv::Mat img = render_synthetic(seed % 2 ? SynthKind::PHOTO : SynthKind::GENERATED, 128, seed).image;
    const auto h = phash_bits(img);
    hashes.push_back(h);
    const cv::Mat q70 = decode_image(encode_jpeg(img, 70));
    stable += hamming(h, phash_bits(q70)) <= kDefaultDedupEps;
    cv::Mat small;
    cv::resize(img, small, cv::Size(96, 96), 0, 0, cv::INTER_AREA);
    stable += hamming(h, phash_bits(small)) <= kDefaultDedupEps;
    total += 2;
  }
  EXPECT_GE(stable, total * 95 / 100);
  for (std::size_t i = 1; i < hashes.size(); ++i) far += hamming(hashes[i - 1], hashes[i]);
  // Distinct images sit well apart on average.
  EXPECT_GT(static_cast<double>(far) / static_cast<double>(hashes.size() - 1), 8.0);
}

TEST(Phash, FromBytes) {
  const cv::Mat img = render_synthetic(SynthKind::PHOTO, 64, 5).image;
  const auto bytes = encode_png(img);
  const auto h = phash("a", bytes);
  EXPECT_EQ(h.image_id, "a");
  EXPECT_EQ(h.bits, phash_bits(img));
  const std::vector<std::uint8_t> junk{1, 2, 3};
  EXPECT_THROW(phash("b", junk), DecodeError);
}

TEST(Phash, HexRoundTrip) {
  Rng rng(33);
  for (int i = 0; i < 100; ++i) {
    const auto x = rng.next_u64();
    const auto hex = hash_hex(x);
    EXPECT_EQ(hex.size(), 16u);
    EXPECT_EQ(parse_hash_hex(hex), x);
  }
  EXPECT_EQ(hash_hex(0x8000000000000000ULL), "8000000000000000");
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
  EXPECT_THROW(parse_hash_hex("xyz"), Error);
  EXPECT_THROW(parse_hash_hex("00000000000000001"), Error);
}

std::vector<PerceptualHash> named(const std::vector<std::uint64_t>& pts) {
  std::vector<PerceptualHash> out;
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({"id" + std::to_string(i), pts[i]});
  return out;
}

std::set<std::set<std::string>> as_sets(const std::vector<DuplicateCluster>& cs) {
  std::set<std::set<std::string>> out;
  for (const auto& c : cs) out.insert({c.member_ids.begin(), c.member_ids.end()});
  return out;
}

TEST(Cluster, InputOrderDoesNotMatter) {
  Rng rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    auto hashes = named(random_corpus(rng, trial % 2 == 0));
    const auto a = cluster(hashes);
    rng.shuffle(hashes);
    const auto b = cluster(hashes);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].member_ids, b[i].member_ids);
      EXPECT_EQ(a[i].medoid_id, b[i].medoid_id);
    }
  }
}

TEST(Cluster, MatchesOraclePartitionAndMedoid) {
  Rng rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    const auto hashes = named(random_corpus(rng, false));
    auto sorted = hashes;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
      return x.bits != y.bits ? x.bits < y.bits : x.image_id < y.image_id;
    });
    std::vector<std::uint64_t> pts;
    std::vector<std::string> ids;
    for (const auto& h : sorted) pts.push_back(h.bits), ids.push_back(h.image_id);
    const auto want = oracle::partition<std::string>(oracle::dbscan(pts, 3, 2), ids);
    const auto got = cluster(hashes, 3, 2);
    EXPECT_EQ(as_sets(got), want);
    std::map<std::string, std::uint64_t> bits;
    for (const auto& h : hashes) bits[h.image_id] = h.bits;
    for (const auto& c : got) {
      EXPECT_TRUE(std::is_sorted(c.member_ids.begin(), c.member_ids.end()));
      long best = -1;
      for (const auto& a : c.member_ids) {
        long t = 0;
        for (const auto& b : c.member_ids) t += hamming(bits[a], bits[b]);
        if (best < 0 || t < best) best = t;
      }
      long medoid_total = 0;
      for (const auto& b : c.member_ids) medoid_total += hamming(bits[c.medoid_id], bits[b]);
      EXPECT_EQ(medoid_total, best);
    }
  }
}

TEST(Cluster, ReportAndCsv) {
  const auto hashes = named({0, 1, 3, 0xff00000000000000ULL, 0xff00000000000001ULL, 0x0f0f0f0f0f0f0f0fULL});
  const auto clusters = cluster(hashes, 2, 2);
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0].member_ids, (std::vector<std::string>{"id0", "id1", "id2"}));
  EXPECT_EQ(clusters[0].medoid_id, "id1");
  const auto report = cluster_report(clusters);
  EXPECT_EQ(report.clustered_images, 5u);
  EXPECT_EQ(report.size_histogram.at(3), 1u);
  EXPECT_EQ(report.size_histogram.at(2), 1u);
  EXPECT_NE(report.csv.find("id0;id1;id2"), std::string::npos);

  EXPECT_EQ(parse_phashes_csv(phashes_csv(hashes)), hashes);
  const auto j = clusters_to_json(clusters, 2, 2, hashes.size());
  EXPECT_NE(j.find("\"eps\""), std::string::npos);
}

}  // namespace
}  // namespace ganwild
