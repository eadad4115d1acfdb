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

// Reference implementations written from the definitions, used to check the
// library. They favor obviousness over speed.

#ifndef GANWILD_TESTS_ORACLES_HPP_
#define GANWILD_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ganwild/accounts.hpp"
#include "ganwild/calibrate.hpp"

namespace ganwild::oracle {

inline Confusion count_confusion(std::span<const LabeledScore> scores, double threshold) {
  Confusion c;
  for (const auto& s : scores) {
    if (s.label == Label::UNSURE) continue;
    const bool fake = s.label == Label::FAKE;
    const bool flagged = s.score >= threshold;
    if (fake && flagged) ++c.tp;
    if (!fake && flagged) ++c.fp;
    if (!fake && !flagged) ++c.tn;
    if (fake && !flagged) ++c.fn;
  }
  return c;
}

// Tries every observed score as the threshold. F1 values are compared as
// fractions 2tp / (2tp + fp + fn); on equal F1 the larger threshold wins.
inline ThresholdChoice choose_threshold(std::span<const LabeledScore> scores) {
  std::set<double> candidates;
  for (const auto& s : scores) {
    if (s.label != Label::UNSURE) candidates.insert(s.score);
  }
  bool have = false;
  double best_t = 0;
  std::uint64_t best_num = 0, best_den = 1;
  Confusion best{};
  for (double t : candidates) {
    const Confusion c = count_confusion(scores, t);
    const std::uint64_t num = 2 * c.tp;
    const std::uint64_t den = 2 * c.tp + c.fp + c.fn;
    const bool better = !have || num * best_den > best_num * den || (num * best_den == best_num * den && t > best_t);
    if (better) {
      have = true;
      best_t = t;
      best_num = num;
      best_den = den;
      best = c;
    }
  }
  ThresholdChoice out;
  out.threshold = best_t;
  out.f1 = best_den == 0 ? 0.0 : static_cast<double>(best_num) / static_cast<double>(best_den);
  out.precision = best.tp + best.fp == 0 ? 0.0 : static_cast<double>(best.tp) / static_cast<double>(best.tp + best.fp);
  out.recall = best.tp + best.fn == 0 ? 0.0 : static_cast<double>(best.tp) / static_cast<double>(best.tp + best.fn);
  return out;
}

// Mann-Whitney over all (fake, real) pairs, ties worth one half.
inline double auc(std::span<const LabeledScore> scores) {
  std::uint64_t twice_wins = 0, fakes = 0, reals = 0;
  for (const auto& f : scores) {
    if (f.label != Label::FAKE) continue;
    ++fakes;
    for (const auto& r : scores) {
      if (r.label != Label::REAL) continue;
      if (f.score > r.score) twice_wins += 2;
      if (f.score == r.score) twice_wins += 1;
    }
  }
  for (const auto& r : scores) reals += r.label == Label::REAL;
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(fakes) * static_cast<double>(reals));
}

inline int hamming(std::uint64_t a, std::uint64_t b) {
  int d = 0;
  for (std::uint64_t x = a ^ b; x; x >>= 1) d += static_cast<int>(x & 1);
  return d;
}

// DBSCAN by definition over the full pairwise graph. Clusters are the
// connected components of core points; a border point joins the cluster of
// its lowest-indexed core neighbor. Returns -1 for noise; labels are
// component indices in order of their lowest core point.
inline std::vector<int> dbscan(std::span<const std::uint64_t> points, int eps, int min_samples) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (hamming(points[i], points[j]) <= eps) nbrs[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<int>(nbrs[i].size()) >= min_samples;
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] != -1) continue;
    std::vector<std::size_t> stack{i};
    label[i] = next;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      for (std::size_t q : nbrs[p]) {
        if (core[q] && label[q] == -1) {
          label[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t q : nbrs[i]) {  // ascending
      if (core[q]) {
        label[i] = label[q];
        break;
      }
    }
  }
  return label;
}

// Cluster labels -> set of member sets, for comparison up to relabeling.
template <typename Id>
std::set<std::set<Id>> partition(std::span<const int> labels, std::span<const Id> ids) {
  std::map<int, std::set<Id>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) groups[labels[i]].insert(ids[i]);
  }
  std::set<std::set<Id>> out;
  for (auto& [k, v] : groups) out.insert(v);
  return out;
}

// Linear interpolation between order statistics at (n - 1) p.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline MetricSummary summarize(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  MetricSummary s;
  s.count = v.size();
  long double sum = 0;
  for (double x : v) sum += x;
  s.mean = static_cast<double>(sum / static_cast<long double>(v.size()));
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  s.q1 = quantile_sorted(v, 0.25);
  s.q3 = quantile_sorted(v, 0.75);
  s.min = v.front();
  s.max = v.back();
  return s;
}

// Central acceptance region of Binomial(n, p) holding at least 1 - alpha:
// lo is the largest k with P(X < k) <= alpha / 2, hi the smallest k with
// P(X > k) <= alpha / 2.
inline std::pair<int, int> binomial_bounds(int n, double p, double alpha) {
  std::vector<double> pmf(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                           k * std::log(p) + (n - k) * std::log1p(-p);
    pmf[k] = std::exp(log_pmf);
  }
  int lo = 0;
  double below = 0;
  while (lo < n && below + pmf[lo] <= alpha / 2) below += pmf[lo++];
  int hi = n;
  double above = 0;
  while (hi > 0 && above + pmf[hi] <= alpha / 2) above += pmf[hi--];
  return {lo, hi};
}

}  // namespace ganwild::oracle

#endif  // GANWILD_TESTS_ORACLES_HPP_
