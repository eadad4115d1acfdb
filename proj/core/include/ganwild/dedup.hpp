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

#ifndef GANWILD_DEDUP_HPP_
#define GANWILD_DEDUP_HPP_

#include <bit>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "ganwild/common.hpp"

namespace ganwild {

struct PerceptualHash {
  std::string image_id;
  std::uint64_t bits = 0;
  friend bool operator==(const PerceptualHash&, const PerceptualHash&) = default;
};

// DCT hash: grayscale, area-downsample to 32x32, 2-D DCT, keep the 8x8
// lowest-frequency block (DC included), bit = coefficient > block median.
// The first coefficient (row-major) lands in the most significant bit.
// Coefficients within 1e-9 * (1 + |DC|) of zero count as zero, so any uniform
// non-black image hashes to 0x8000000000000000 and a black one to 0.
std::uint64_t phash_bits(const cv::Mat& image);
// Throws DecodeError.
PerceptualHash phash(std::string image_id, std::span<const std::uint8_t> bytes);

inline int hamming(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

std::string hash_hex(std::uint64_t bits);
std::uint64_t parse_hash_hex(std::string_view text);

// Exact Hamming radius queries through eps + 1 disjoint bit chunks: two
// hashes within distance eps agree on at least one chunk.
class HammingIndex {
 public:
  HammingIndex(std::span<const std::uint64_t> points, int eps);
  // Indices within distance eps of `query`, ascending.
  std::vector<std::size_t> radius(std::uint64_t query) const;

 private:
  std::uint64_t chunk(std::uint64_t bits, std::size_t c) const;

  std::vector<std::uint64_t> points_;
  int eps_;
  std::vector<int> shifts_;
  std::vector<std::uint64_t> masks_;
  std::vector<std::map<std::uint64_t, std::vector<std::size_t>>> tables_;
};

inline constexpr int kNoise = -1;

// DBSCAN over Hamming distance on points in the given order. A point is core
// when at least min_samples points (itself included) lie within eps.
// Clusters are the connected components of core points, numbered by their
// lowest-indexed core point; a non-core point joins the cluster of its
// lowest-indexed core neighbour, otherwise it is noise.
std::vector<int> dbscan_hamming(std::span<const std::uint64_t> points, int eps, int min_samples);

struct DuplicateCluster {
  int cluster_id = 0;
  std::vector<std::string> member_ids;  // sorted
  std::string medoid_id;
};

inline constexpr int kDefaultDedupEps = 3;
inline constexpr int kDefaultDedupMinSamples = 2;

// Points are ordered by (hash, image_id) before clustering.
std::vector<DuplicateCluster> cluster(std::span<const PerceptualHash> hashes, int eps = kDefaultDedupEps,
                                      int min_samples = kDefaultDedupMinSamples);

struct ClusterReport {
  std::map<std::size_t, std::size_t> size_histogram;  // size -> number of clusters
  std::size_t clustered_images = 0;
  std::string csv;  // cluster_id,size,medoid_id,member_ids (';'-joined)
};

ClusterReport cluster_report(std::span<const DuplicateCluster> clusters);

std::string phashes_csv(std::span<const PerceptualHash> hashes);
std::vector<PerceptualHash> parse_phashes_csv(std::string_view text);
std::string clusters_to_json(std::span<const DuplicateCluster> clusters, int eps, int min_samples,
                             std::size_t input_size);

}  // namespace ganwild

#endif  // GANWILD_DEDUP_HPP_
