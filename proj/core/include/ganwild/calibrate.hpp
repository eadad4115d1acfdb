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

#ifndef GANWILD_CALIBRATE_HPP_
#define GANWILD_CALIBRATE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ganwild/facegate.hpp"
#include "ganwild/scores.hpp"

namespace ganwild {

enum class Label { REAL, FAKE, UNSURE };
std::string_view to_string(Label label);
Label parse_label(std::string_view text);

struct LabeledScore {
  std::string image_id;
  double score = 0.0;
  Label label = Label::UNSURE;
  friend bool operator==(const LabeledScore&, const LabeledScore&) = default;
};

// Decision rule everywhere in this module: predict FAKE iff score >= threshold.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct ThresholdChoice {
  double threshold = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  friend bool operator==(const ThresholdChoice&, const ThresholdChoice&) = default;
};

struct ErrorEstimate {
  double fnr = 0.0;  // FN / (FN + TP)
  double fdr = 0.0;  // FP / (FP + TP)
  Confusion confusion;
  // Set when the matching denominator is zero and the rate was defined as 0.
  bool fnr_degenerate = false;
  bool fdr_degenerate = false;
  friend bool operator==(const ErrorEstimate&, const ErrorEstimate&) = default;
};

// UNSURE entries are dropped by every function below.

// Rank statistic: P(random FAKE outscores random REAL), ties count 1/2.
// Throws Error unless both classes are present.
double auc(std::span<const LabeledScore> scores);

// Exhaustive over observed score values; ties in F1 go to the largest
// threshold. Throws Error unless both classes are present.
ThresholdChoice choose_threshold(std::span<const LabeledScore> scores);

Confusion confusion_at(std::span<const LabeledScore> scores, double threshold);
ErrorEstimate error_rates(std::span<const LabeledScore> scores, double threshold);
// 2PR / (P + R), 0 when both are 0.
double f1_from(const Confusion& c);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};
struct PrPoint {
  double threshold;
  double recall;
  double precision;
};
std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores);
std::vector<PrPoint> pr_curve(std::span<const LabeledScore> scores);
std::string roc_csv(std::span<const RocPoint> points);
std::string pr_csv(std::span<const PrPoint> points);

struct LabelingSubset {
  std::vector<std::string> ids;  // descending score
  std::vector<double> scores;
  std::size_t population = 0;  // images in the gate log
  std::size_t sampled = 0;
  std::size_t eligible = 0;  // sampled, gated and scored
  std::optional<double> score_max;
  std::optional<double> score_min;
  std::string warning;
};

// Seeded uniform sample of floor(fraction * |gate log|) images, restricted to
// those that passed the gate and have a score, sorted by score descending
// (ties by id), truncated to top_k.
LabelingSubset labeling_subset(std::span<const ScoreRecord> scores, std::span<const GateDecision> gate_log,
                               double sample_fraction, std::size_t top_k, std::uint64_t seed);

struct LabeledSplit {
  std::vector<LabeledScore> validation;
  std::vector<LabeledScore> test;
};

// Stratified 50/50 split. An odd class count puts its extra item in the half
// that is currently smaller, so half sizes differ by at most one.
LabeledSplit split_labeled(std::span<const LabeledScore> labels, std::uint64_t seed);

std::string calibration_to_json(const ThresholdChoice& choice, std::optional<double> auc_value);
std::string errors_to_json(const ErrorEstimate& estimate);
ThresholdChoice calibration_from_json(std::string_view text);
ErrorEstimate errors_from_json(std::string_view text);

}  // namespace ganwild

#endif  // GANWILD_CALIBRATE_HPP_
