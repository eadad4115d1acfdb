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

#include "ganwild/calibrate.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

struct Binary {
  double score;
  bool fake;
};

std::vector<Binary> binary_only(std::span<const LabeledScore> scores) {
  std::vector<Binary> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    if (s.label != Label::UNSURE) out.push_back({s.score, s.label == Label::FAKE});
  }
  return out;
}

void require_both_classes(const std::vector<Binary>& items, std::string_view what) {
  const auto fakes = std::count_if(items.begin(), items.end(), [](const Binary& b) { return b.fake; });
  if (fakes == 0 || static_cast<std::size_t>(fakes) == items.size()) {
    throw Error(fmt::format("{}: need at least one REAL and one FAKE label (got {} FAKE of {})", what, fakes,
                            items.size()));
  }
}

// Descending-score sweep; calls visit(threshold, tp, fp) once per distinct
// score with counts for "score >= threshold".
template <typename Visit>
void sweep_descending(std::vector<Binary> items, Visit visit) {
  std::sort(items.begin(), items.end(), [](const Binary& a, const Binary& b) { return a.score > b.score; });
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < items.size();) {
    const double t = items[i].score;
    while (i < items.size() && items[i].score == t) {
      (items[i].fake ? tp : fp) += 1;
      ++i;
    }
    visit(t, tp, fp);
  }
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::REAL: return "REAL";
    case Label::FAKE: return "FAKE";
    case Label::UNSURE: return "UNSURE";
  }
  return "UNSURE";
}

Label parse_label(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "real") return Label::REAL;
  if (lower == "fake") return Label::FAKE;
  if (lower == "unsure") return Label::UNSURE;
  throw Error(fmt::format("unknown label '{}'", text));
}

double auc(std::span<const LabeledScore> scores) {
  std::vector<Binary> items = binary_only(scores);
  require_both_classes(items, "auc");
  std::sort(items.begin(), items.end(), [](const Binary& a, const Binary& b) { return a.score < b.score; });
  std::uint64_t reals_below = 0, n_fake = 0, n_real = 0;
  std::uint64_t twice_u = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::uint64_t reals = 0, fakes = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      (items[j].fake ? fakes : reals) += 1;
      ++j;
    }
    twice_u += fakes * (2 * reals_below + reals);
    reals_below += reals;
    n_fake += fakes;
    n_real += reals;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_fake) * static_cast<double>(n_real));
}

double f1_from(const Confusion& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

ThresholdChoice choose_threshold(std::span<const LabeledScore> scores) {
  std::vector<Binary> items = binary_only(scores);
  require_both_classes(items, "choose_threshold");
  const std::size_t positives =
      static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const Binary& b) { return b.fake; }));
  bool have = false;
  double best_t = 0.0;
  std::size_t best_tp = 0, best_fp = 0;
  sweep_descending(std::move(items), [&](double t, std::size_t tp, std::size_t fp) {
    // F1 = 2tp / (tp + fp + positives); compare as exact fractions.
    const unsigned __int128 lhs = static_cast<unsigned __int128>(2 * tp) * (best_tp + best_fp + positives);
    const unsigned __int128 rhs = static_cast<unsigned __int128>(2 * best_tp) * (tp + fp + positives);
    if (!have || lhs > rhs) {
      have = true;
      best_t = t;
      best_tp = tp;
      best_fp = fp;
    }
  });
  const Confusion c{best_tp, best_fp, 0, positives - best_tp};
  ThresholdChoice choice;
  choice.threshold = best_t;
  choice.f1 = f1_from(c);
  choice.precision = best_tp + best_fp == 0 ? 0.0 : static_cast<double>(best_tp) / static_cast<double>(best_tp + best_fp);
  choice.recall = static_cast<double>(best_tp) / static_cast<double>(positives);
  return choice;
}

Confusion confusion_at(std::span<const LabeledScore> scores, double threshold) {
  Confusion c;
  for (const auto& s : scores) {
    if (s.label == Label::UNSURE) continue;
    const bool predicted_fake = s.score >= threshold;
    if (s.label == Label::FAKE) {
      (predicted_fake ? c.tp : c.fn) += 1;
    } else {
      (predicted_fake ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

ErrorEstimate error_rates(std::span<const LabeledScore> scores, double threshold) {
  ErrorEstimate e;
  e.confusion = confusion_at(scores, threshold);
  const auto& c = e.confusion;
  if (c.fn + c.tp == 0) {
    e.fnr_degenerate = true;
  } else {
    e.fnr = static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
  }
  if (c.fp + c.tp == 0) {
    e.fdr_degenerate = true;
  } else {
    e.fdr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tp);
  }
  return e;
}

std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores) {
  std::vector<Binary> items = binary_only(scores);
  require_both_classes(items, "roc_curve");
  const double pos = static_cast<double>(std::count_if(items.begin(), items.end(), [](const Binary& b) { return b.fake; }));
  const double neg = static_cast<double>(items.size()) - pos;
  std::vector<RocPoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  sweep_descending(std::move(items), [&](double t, std::size_t tp, std::size_t fp) {
    points.push_back({t, static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
  });
  return points;
}

std::vector<PrPoint> pr_curve(std::span<const LabeledScore> scores) {
  std::vector<Binary> items = binary_only(scores);
  require_both_classes(items, "pr_curve");
  const double pos = static_cast<double>(std::count_if(items.begin(), items.end(), [](const Binary& b) { return b.fake; }));
  std::vector<PrPoint> points;
  sweep_descending(std::move(items), [&](double t, std::size_t tp, std::size_t fp) {
    points.push_back({t, static_cast<double>(tp) / pos, static_cast<double>(tp) / static_cast<double>(tp + fp)});
  });
  return points;
}

std::string roc_csv(std::span<const RocPoint> points) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : points) out += fmt::format("{},{},{}\n", p.fpr, p.tpr, p.threshold);
  return out;
}

std::string pr_csv(std::span<const PrPoint> points) {
  std::string out = "recall,precision,threshold\n";
  for (const auto& p : points) out += fmt::format("{},{},{}\n", p.recall, p.precision, p.threshold);
  return out;
}

LabelingSubset labeling_subset(std::span<const ScoreRecord> scores, std::span<const GateDecision> gate_log,
                               double sample_fraction, std::size_t top_k, std::uint64_t seed) {
  if (sample_fraction < 0.0 || sample_fraction > 1.0) throw Error("labeling_subset: fraction outside [0, 1]");
  LabelingSubset out;
  std::vector<std::string> population;
  std::unordered_set<std::string> passed;
  {
    std::unordered_set<std::string> seen;
    for (const auto& d : gate_log) {
      if (!seen.insert(d.image_id).second) continue;
      population.push_back(d.image_id);
      if (d.passed) passed.insert(d.image_id);
    }
  }
  std::sort(population.begin(), population.end());
  out.population = population.size();
  const auto sample_size = static_cast<std::size_t>(std::floor(sample_fraction * static_cast<double>(population.size())));
  Rng rng(seed);
  // Partial Fisher-Yates: the first sample_size slots are the sample.
  for (std::size_t i = 0; i < sample_size; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(population.size()) - 1));
    std::swap(population[i], population[j]);
  }
  population.resize(sample_size);
  out.sampled = sample_size;

  std::unordered_map<std::string, double> score_of;
  for (const auto& s : scores) score_of[s.image_id] = s.score;
  std::vector<std::pair<double, std::string>> eligible;
  for (auto& id : population) {
    if (!passed.contains(id)) continue;
    const auto it = score_of.find(id);
    if (it == score_of.end()) continue;
    eligible.emplace_back(it->second, std::move(id));
  }
  std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  out.eligible = eligible.size();
  if (eligible.size() < top_k) {
    out.warning = fmt::format("only {} gated images in the sample; requested {}", eligible.size(), top_k);
  }
  eligible.resize(std::min(top_k, eligible.size()));
  for (auto& [score, id] : eligible) {
    out.ids.push_back(std::move(id));
    out.scores.push_back(score);
  }
  if (!out.scores.empty()) {
    out.score_max = out.scores.front();
    out.score_min = out.scores.back();
  }
  return out;
}

LabeledSplit split_labeled(std::span<const LabeledScore> labels, std::uint64_t seed) {
  LabeledSplit out;
  std::map<Label, std::vector<LabeledScore>> by_label;
  for (const auto& l : labels) {
    if (l.label == Label::UNSURE) continue;
    by_label[l.label].push_back(l);
  }
  Rng rng(seed);
  for (auto& [label, items] : by_label) {
    std::sort(items.begin(), items.end(), [](const LabeledScore& a, const LabeledScore& b) { return a.image_id < b.image_id; });
    rng.shuffle(items);
    std::size_t to_validation = items.size() / 2;
    if (items.size() % 2 == 1 && out.validation.size() <= out.test.size()) ++to_validation;
    for (std::size_t i = 0; i < items.size(); ++i) {
      (i < to_validation ? out.validation : out.test).push_back(std::move(items[i]));
    }
  }
  return out;
}

std::string calibration_to_json(const ThresholdChoice& c, std::optional<double> auc_value) {
  json j{{"threshold", c.threshold}, {"f1", c.f1}, {"precision", c.precision}, {"recall", c.recall}};
  j["auc"] = auc_value ? json(*auc_value) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string errors_to_json(const ErrorEstimate& e) {
  const json j{{"fnr", e.fnr},
               {"fdr", e.fdr},
               {"fnr_degenerate", e.fnr_degenerate},
               {"fdr_degenerate", e.fdr_degenerate},
               {"confusion", {{"tp", e.confusion.tp}, {"fp", e.confusion.fp}, {"tn", e.confusion.tn}, {"fn", e.confusion.fn}}}};
  return j.dump(2) + "\n";
}

ThresholdChoice calibration_from_json(std::string_view text) {
  const json j = json::parse(text);
  return {j.at("threshold").get<double>(), j.at("f1").get<double>(), j.at("precision").get<double>(),
          j.at("recall").get<double>()};
}

ErrorEstimate errors_from_json(std::string_view text) {
  const json j = json::parse(text);
  ErrorEstimate e;
  e.fnr = j.at("fnr").get<double>();
  e.fdr = j.at("fdr").get<double>();
  e.fnr_degenerate = j.value("fnr_degenerate", false);
  e.fdr_degenerate = j.value("fdr_degenerate", false);
  const auto& c = j.at("confusion");
  e.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                 c.at("fn").get<std::size_t>()};
  return e;
}

}  // namespace ganwild
