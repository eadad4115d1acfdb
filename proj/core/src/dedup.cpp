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

#include "ganwild/dedup.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include <fmt/format.h>

#include "ganwild/image.hpp"
#include "json.hpp"

namespace ganwild {

std::uint64_t phash_bits(const cv::Mat& image) {
  if (image.empty()) throw Error("phash of an empty image");
  cv::Mat gray;
  if (image.channels() == 3) {
    cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  } else if (image.channels() == 4) {
    cv::cvtColor(image, gray, cv::COLOR_BGRA2GRAY);
  } else {
    gray = image;
  }
  cv::Mat f;
  gray.convertTo(f, CV_64F);
  cv::Mat small;
  cv::resize(f, small, cv::Size(32, 32), 0, 0, cv::INTER_AREA);
  cv::Mat coeffs;
  cv::dct(small, coeffs);

  std::array<double, 64> block{};
  const double dc = std::abs(coeffs.at<double>(0, 0));
  const double tiny = 1e-9 * (1.0 + dc);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double c = coeffs.at<double>(y, x);
      block[y * 8 + x] = std::abs(c) < tiny ? 0.0 : c;
    }
  }
  std::array<double, 64> sorted = block;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[31] + sorted[32]);
  std::uint64_t bits = 0;
  for (int i = 0; i < 64; ++i) {
    if (block[i] > median) bits |= std::uint64_t{1} << (63 - i);
  }
  return bits;
}

PerceptualHash phash(std::string image_id, std::span<const std::uint8_t> bytes) {
  return {std::move(image_id), phash_bits(decode_image(bytes))};
}

std::string hash_hex(std::uint64_t bits) { return fmt::format("{:016x}", bits); }

std::uint64_t parse_hash_hex(std::string_view text) {
  const std::string s = trim(text);
  if (s.size() != 16 || !std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
    throw Error(fmt::format("'{}' is not a 16-digit hex hash", s));
  }
  return std::stoull(s, nullptr, 16);
}

HammingIndex::HammingIndex(std::span<const std::uint64_t> points, int eps)
    : points_(points.begin(), points.end()), eps_(eps) {
  if (eps < 0 || eps > 63) throw ConfigError(fmt::format("eps must be in [0, 63], got {}", eps));
  const int chunks = eps + 1;
  int offset = 0;
  for (int c = 0; c < chunks; ++c) {
    const int width = 64 / chunks + (c < 64 % chunks ? 1 : 0);
    shifts_.push_back(offset);
    masks_.push_back(width == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1));
    offset += width;
  }
  tables_.resize(chunks);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t c = 0; c < tables_.size(); ++c) tables_[c][chunk(points_[i], c)].push_back(i);
  }
}

std::uint64_t HammingIndex::chunk(std::uint64_t bits, std::size_t c) const {
  return (bits >> shifts_[c]) & masks_[c];
}

std::vector<std::size_t> HammingIndex::radius(std::uint64_t query) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < tables_.size(); ++c) {
    const auto it = tables_[c].find(chunk(query, c));
    if (it == tables_[c].end()) continue;
    for (auto i : it->second) {
      if (hamming(points_[i], query) <= eps_) out.push_back(i);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> dbscan_hamming(std::span<const std::uint64_t> points, int eps, int min_samples) {
  if (min_samples < 1) throw ConfigError("min_samples must be at least 1");
  const std::size_t n = points.size();
  const HammingIndex index(points, eps);
  std::vector<std::vector<std::size_t>> neighbors(n);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    neighbors[i] = index.radius(points[i]);
    core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_samples);
  }
  std::vector<int> labels(n, kNoise);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kNoise) continue;
    const int id = next++;
    labels[i] = id;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      for (auto q : neighbors[p]) {
        if (core[q] && labels[q] == kNoise) {
          labels[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (auto q : neighbors[i]) {  // ascending, so the first core hit is the lowest
      if (core[q]) {
        labels[i] = labels[q];
        break;
      }
    }
  }
  return labels;
}

std::vector<DuplicateCluster> cluster(std::span<const PerceptualHash> hashes, int eps, int min_samples) {
  std::vector<std::size_t> order(hashes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (hashes[a].bits != hashes[b].bits) return hashes[a].bits < hashes[b].bits;
    return hashes[a].image_id < hashes[b].image_id;
  });
  std::vector<std::uint64_t> points;
  points.reserve(order.size());
  for (auto i : order) points.push_back(hashes[i].bits);
  const auto labels = dbscan_hamming(points, eps, min_samples);

  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != kNoise) members[labels[k]].push_back(k);
  }
  std::vector<DuplicateCluster> out;
  for (int c = 0; c < count; ++c) {
    const auto& m = members[c];
    DuplicateCluster dc;
    dc.cluster_id = c;
    std::size_t best = m.front();
    long best_total = -1;
    for (auto a : m) {
      long total = 0;
      for (auto b : m) total += hamming(points[a], points[b]);
      if (best_total < 0 || total < best_total) {
        best_total = total;
        best = a;
      }
    }
    dc.medoid_id = hashes[order[best]].image_id;
    for (auto k : m) dc.member_ids.push_back(hashes[order[k]].image_id);
    std::sort(dc.member_ids.begin(), dc.member_ids.end());
    out.push_back(std::move(dc));
  }
  return out;
}

ClusterReport cluster_report(std::span<const DuplicateCluster> clusters) {
  ClusterReport report;
  report.csv = "cluster_id,size,medoid_id,member_ids\n";
  for (const auto& c : clusters) {
    ++report.size_histogram[c.member_ids.size()];
    report.clustered_images += c.member_ids.size();
    std::string joined;
    for (const auto& id : c.member_ids) {
      if (!joined.empty()) joined += ';';
      joined += id;
    }
    report.csv += fmt::format("{},{},{},{}\n", c.cluster_id, c.member_ids.size(), c.medoid_id, joined);
  }
  return report;
}

std::string phashes_csv(std::span<const PerceptualHash> hashes) {
  std::string out = "image_id,phash\n";
  for (const auto& h : hashes) out += fmt::format("{},{}\n", h.image_id, hash_hex(h.bits));
  return out;
}

std::vector<PerceptualHash> parse_phashes_csv(std::string_view text) {
  std::vector<PerceptualHash> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line == "image_id,phash") continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(fmt::format("malformed phash row '{}'", line));
    out.push_back({line.substr(0, comma), parse_hash_hex(std::string_view(line).substr(comma + 1))});
  }
  return out;
}

std::string clusters_to_json(std::span<const DuplicateCluster> clusters, int eps, int min_samples,
                             std::size_t input_size) {
  using nlohmann::json;
  json arr = json::array();
  std::size_t clustered = 0;
  for (const auto& c : clusters) {
    arr.push_back({{"cluster_id", c.cluster_id},
                   {"size", c.member_ids.size()},
                   {"medoid_id", c.medoid_id},
                   {"member_ids", c.member_ids}});
    clustered += c.member_ids.size();
  }
  const json j{{"eps", eps},
               {"min_samples", min_samples},
               {"images", input_size},
               {"clustered", clustered},
               {"noise", input_size - clustered},
               {"clusters", arr}};
  return j.dump(2) + "\n";
}

}  // namespace ganwild
