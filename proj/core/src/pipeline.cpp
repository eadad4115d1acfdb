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

#include "ganwild/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, value));
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, value));
  }
}

std::map<std::string, GateDecision> index_by_id(std::vector<GateDecision> decisions) {
  std::map<std::string, GateDecision> out;
  for (auto& d : decisions) out.insert_or_assign(d.image_id, std::move(d));
  return out;
}

json label_counts_json(const std::map<Label, std::size_t>& counts) {
  json j = json::object();
  for (auto l : {Label::REAL, Label::FAKE, Label::UNSURE}) {
    const auto it = counts.find(l);
    j[std::string(to_string(l))] = it == counts.end() ? 0 : it->second;
  }
  return j;
}

std::string scores_key(std::string_view model_id) {
  std::string out;
  for (char c : model_id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

}  // namespace

// ---- PipelineConfig ---------------------------------------------------------

PipelineConfig PipelineConfig::parse(std::string_view text) {
  PipelineConfig c;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (const auto hash = line.find(" #"); hash != std::string::npos) line = trim(line.substr(0, hash));
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", number));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "workspace") c.workspace = value;
      else if (key == "corpus_id") c.corpus_id = value;
      else if (key == "model_id") c.model_id = value;
      else if (key == "face_detector") c.face_detector = value;
      else if (key == "detect_roles") {
        c.detect_roles.clear();
        std::stringstream ss(value);
        std::string role;
        while (std::getline(ss, role, ',')) {
          if (!trim(role).empty()) c.detect_roles.insert(parse_role(trim(role)));
        }
      } else if (key == "min_eye_distance") c.min_eye_distance = parse_double(key, value);
      else if (key == "alignment_k") c.alignment_k = static_cast<int>(parse_int(key, value));
      else if (key == "alignment_ref") c.alignment_ref = value;
      else if (key == "threshold") {
        if (value.empty() || value == "none") c.threshold.reset();
        else c.threshold = parse_double(key, value);
      } else if (key == "subset.fraction") c.subset_fraction = parse_double(key, value);
      else if (key == "subset.top_k") c.subset_top_k = static_cast<std::size_t>(parse_int(key, value));
      else if (key == "dedup.eps") c.dedup_eps = static_cast<int>(parse_int(key, value));
      else if (key == "dedup.min_samples") c.dedup_min_samples = static_cast<int>(parse_int(key, value));
      else if (key == "content.threshold") c.content_threshold = parse_double(key, value);
      else if (key == "content.min_cluster_size") c.content_min_cluster_size = static_cast<std::size_t>(parse_int(key, value));
      else if (key == "generator") c.generator = value;
      else if (key == "inversion.steps") c.inversion_steps = static_cast<int>(parse_int(key, value));
      else if (key == "accounts") c.accounts_path = value;
      else if (key == "statuses") c.statuses_path = value;
      else if (key == "bulk.window_hours") c.bulk_window_hours = static_cast<int>(parse_int(key, value));
      else if (key == "bulk.min_count") c.bulk_min_count = static_cast<std::size_t>(parse_int(key, value));
      else if (key == "collected_at") c.collected_at = parse_timestamp(value);
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
      else if (key == "service.host") c.service_host = value;
      else if (key == "service.port") c.service_port = static_cast<int>(parse_int(key, value));
      else throw ConfigError(fmt::format("unknown key '{}'", key));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}", number, e.what()));
    } catch (const Error& e) {
      throw ConfigError(fmt::format("config line {}: {}", number, e.what()));
    }
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) { return parse(read_file_text(path)); }

std::string PipelineConfig::to_text() const {
  std::string roles;
  for (auto r : detect_roles) {
    if (!roles.empty()) roles += ',';
    roles += to_string(r);
  }
  std::string out;
  out += fmt::format("workspace = {}\n", workspace.string());
  out += fmt::format("corpus_id = {}\n", corpus_id);
  out += fmt::format("model_id = {}\n", model_id);
  if (!face_detector.empty()) out += fmt::format("face_detector = {}\n", face_detector);
  out += fmt::format("detect_roles = {}\n", roles);
  out += fmt::format("min_eye_distance = {}\n", min_eye_distance);
  out += fmt::format("alignment_k = {}\n", alignment_k);
  if (!alignment_ref.empty()) out += fmt::format("alignment_ref = {}\n", alignment_ref.string());
  if (threshold) out += fmt::format("threshold = {}\n", *threshold);
  out += fmt::format("subset.fraction = {}\n", subset_fraction);
  out += fmt::format("subset.top_k = {}\n", subset_top_k);
  out += fmt::format("dedup.eps = {}\n", dedup_eps);
  out += fmt::format("dedup.min_samples = {}\n", dedup_min_samples);
  out += fmt::format("content.threshold = {}\n", content_threshold);
  out += fmt::format("content.min_cluster_size = {}\n", content_min_cluster_size);
  out += fmt::format("generator = {}\n", generator);
  out += fmt::format("inversion.steps = {}\n", inversion_steps);
  if (!accounts_path.empty()) out += fmt::format("accounts = {}\n", accounts_path.string());
  if (!statuses_path.empty()) out += fmt::format("statuses = {}\n", statuses_path.string());
  out += fmt::format("bulk.window_hours = {}\n", bulk_window_hours);
  out += fmt::format("bulk.min_count = {}\n", bulk_min_count);
  if (collected_at) out += fmt::format("collected_at = {}\n", format_timestamp(*collected_at));
  out += fmt::format("seed = {}\n", seed);
  out += fmt::format("service.host = {}\n", service_host);
  out += fmt::format("service.port = {}\n", service_port);
  return out;
}

void PipelineConfig::validate() const {
  if (min_eye_distance < 0.0) throw ConfigError("min_eye_distance must be non-negative");
  if (alignment_k <= 0) throw ConfigError("alignment_k must be positive");
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) throw ConfigError("subset.fraction must lie in (0, 1]");
  if (subset_top_k == 0) throw ConfigError("subset.top_k must be positive");
  if (dedup_eps < 0 || dedup_eps > 63) throw ConfigError("dedup.eps must lie in [0, 63]");
  if (dedup_min_samples < 1) throw ConfigError("dedup.min_samples must be at least 1");
  if (content_min_cluster_size == 0) throw ConfigError("content.min_cluster_size must be positive");
  if (inversion_steps <= 0) throw ConfigError("inversion.steps must be positive");
  if (bulk_window_hours <= 0) throw ConfigError("bulk.window_hours must be positive");
  if (service_port < 0 || service_port > 65535) throw ConfigError("service.port must lie in [0, 65535]");
  if (detect_roles.empty()) throw ConfigError("detect_roles must name at least one role");
}

std::string PipelineConfig::face_detector_spec() const {
  return face_detector.empty() ? "sidecar:" + (workspace / "faces").string() : face_detector;
}

// ---- labels -----------------------------------------------------------------

std::string label_event_to_json_line(const LabelEvent& e) {
  const json j{{"image_id", e.image_id},
               {"annotator_id", e.annotator_id},
               {"label", to_string(e.label)},
               {"labeled_at", format_timestamp(e.labeled_at)},
               {"assist_seen", {{"alignment", e.assist_seen.alignment},
                                {"inversion_composite", e.assist_seen.inversion_composite}}}};
  return j.dump() + "\n";
}

LabelEvent label_event_from_json_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    LabelEvent e;
    e.image_id = j.at("image_id").get<std::string>();
    e.annotator_id = j.at("annotator_id").get<std::string>();
    e.label = parse_label(j.at("label").get<std::string>());
    e.labeled_at = parse_timestamp(j.at("labeled_at").get<std::string>());
    if (const auto it = j.find("assist_seen"); it != j.end()) {
      e.assist_seen.alignment = it->value("alignment", false);
      e.assist_seen.inversion_composite = it->value("inversion_composite", false);
    }
    return e;
  } catch (const json::exception& ex) {
    throw Error(fmt::format("malformed label event: {}", ex.what()));
  }
}

LabelView::LabelView(std::span<const LabelEvent> events) {
  for (const auto& e : events) {
    per_annotator_.insert_or_assign({e.image_id, e.annotator_id}, e);
    per_image_.insert_or_assign(e.image_id, e);
  }
}

std::vector<std::string> LabelView::conflicts() const {
  std::vector<std::string> out;
  std::map<std::string, std::set<Label>> labels;
  for (const auto& [key, e] : per_annotator_) labels[key.first].insert(e.label);
  for (const auto& [id, set] : labels) {
    if (set.size() > 1) out.push_back(id);
  }
  return out;
}

// ---- reports ----------------------------------------------------------------

std::string CalibrationOutcome::to_json() const {
  json labels = label_counts_json(labels_used);
  const json j{{"threshold", json::parse(calibration_to_json(choice, auc))},
               {"errors", json::parse(errors_to_json(errors))},
               {"n_validation", n_validation},
               {"n_test", n_test},
               {"labels_used", labels}};
  return j.dump(2) + "\n";
}

CalibrationOutcome CalibrationOutcome::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    CalibrationOutcome o;
    o.choice = calibration_from_json(j.at("threshold").dump());
    const auto& a = j.at("threshold").at("auc");
    if (!a.is_null()) o.auc = a.get<double>();
    o.errors = errors_from_json(j.at("errors").dump());
    o.n_validation = j.at("n_validation").get<std::size_t>();
    o.n_test = j.at("n_test").get<std::size_t>();
    for (const auto& [k, v] : j.at("labels_used").items()) o.labels_used[parse_label(k)] = v.get<std::size_t>();
    return o;
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed calibration file: {}", e.what()));
  }
}

std::string RunReport::to_json() const {
  json roles = json::object();
  for (const auto& [r, n] : role_counts) roles[std::string(to_string(r))] = n;
  json hist = scores.histogram;
  json j{{"corpus_id", corpus_id},
         {"model_id", model_id},
         {"corpus_images", corpus_images},
         {"role_counts", roles},
         {"considered", considered},
         {"gate", {{"pass", gate.pass},
                   {"no_face", gate.no_face},
                   {"too_small", gate.too_small},
                   {"decode_errors", gate.errors},
                   {"reduction_percent", gate.total() ? json(gate.reduction_percent()) : json(nullptr)}}},
         {"scores", {{"count", scores.count},
                     {"min", scores.min},
                     {"max", scores.max},
                     {"mean", scores.mean},
                     {"median", scores.median},
                     {"histogram", hist}}},
         {"threshold", threshold ? json(*threshold) : json(nullptr)},
         {"classified_fake", classified_fake ? json(*classified_fake) : json(nullptr)},
         {"fake_share", classified_fake && scores.count ? json(static_cast<double>(*classified_fake) / scores.count)
                                                       : json(nullptr)},
         {"status", status},
         {"generated_at", format_timestamp(generated_at)}};
  j["calibration"] = calibration ? json::parse(calibration->to_json()) : json(nullptr);
  if (dedup) {
    j["dedup"] = {{"hashed", dedup->hashed},
                  {"clusters", dedup->clusters},
                  {"clustered_images", dedup->clustered_images},
                  {"largest", dedup->largest},
                  {"mean_size", dedup->mean_size}};
  } else {
    j["dedup"] = nullptr;
  }
  j["analytics"] = analytics.empty() ? json(nullptr) : json::parse(analytics);
  return j.dump(2) + "\n";
}

// ---- Pipeline ---------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)), store_(config_.workspace, config_.corpus_id) {
  config_.validate();
  if (config_.corpus_id.empty()) throw ConfigError("corpus_id is required");
}

fs::path Pipeline::run_dir() const { return config_.workspace / "runs" / config_.corpus_id; }

const CorpusManifest& Pipeline::manifest() const {
  std::lock_guard lock(mutex_);
  if (!manifest_) {
    if (!store_.has_manifest()) throw Error(fmt::format("corpus '{}' has no manifest", config_.corpus_id));
    manifest_ = store_.load_manifest();
  }
  return *manifest_;
}

std::vector<ImageRecord> Pipeline::detect_records() const {
  std::vector<ImageRecord> out;
  for (const auto& r : manifest().records) {
    if (config_.detect_roles.contains(r.role)) out.push_back(r);
  }
  return out;
}

std::vector<GateDecision> Pipeline::cached_gates() const {
  const fs::path path = run_dir() / "gates.jsonl";
  return fs::exists(path) ? read_gate_log(path) : std::vector<GateDecision>{};
}

std::vector<ScoreRecord> Pipeline::cached_scores(const std::string& model_id) const {
  const fs::path path = run_dir() / "scores" / (scores_key(model_id) + ".jsonl");
  return fs::exists(path) ? read_score_log(path) : std::vector<ScoreRecord>{};
}

std::vector<GateDecision> Pipeline::gate(const FaceDetector& detector) {
  std::lock_guard lock(mutex_);
  fs::create_directories(run_dir());
  const fs::path meta = run_dir() / "gates.detector";
  const bool same_detector = fs::exists(meta) && trim(read_file_text(meta)) == detector.name();
  auto cache = same_detector ? index_by_id(cached_gates()) : std::map<std::string, GateDecision>{};

  std::vector<GateDecision> out;
  for (const auto& record : detect_records()) {
    if (auto it = cache.find(record.id); it != cache.end()) {
      GateDecision d = it->second;
      // the cached primary-face geometry is independent of the threshold
      if (d.reason != GateReason::DECODE_ERROR && d.geometry && d.eye_distance) {
        d.passed = *d.eye_distance >= config_.min_eye_distance;
        d.reason = d.passed ? GateReason::PASS : GateReason::FACE_TOO_SMALL;
      }
      out.push_back(std::move(d));
      continue;
    }
    try {
      out.push_back(prefilter(record, store_.load_bytes(record), detector, config_.min_eye_distance));
    } catch (const DecodeError& e) {
      GateDecision d;
      d.image_id = record.id;
      d.reason = GateReason::DECODE_ERROR;
      d.error = e.what();
      out.push_back(std::move(d));
    }
  }
  write_gate_log(run_dir() / "gates.jsonl", out);
  write_file_atomic(meta, detector.name() + "\n");
  return out;
}

std::vector<ScoreRecord> Pipeline::score_gated(std::span<const GateDecision> gates, const ImageScorer& scorer) {
  std::lock_guard lock(mutex_);
  std::map<std::string, ScoreRecord> cache;
  for (auto& s : cached_scores(scorer.model_id())) cache.insert_or_assign(s.image_id, std::move(s));

  std::vector<ImageRecord> missing;
  for (const auto& d : gates) {
    if (!d.passed || cache.contains(d.image_id)) continue;
    const ImageRecord* r = manifest().find(d.image_id);
    if (!r) throw Error(fmt::format("gate decision for unknown image {}", d.image_id));
    missing.push_back(*r);
  }
  const ScoreRun fresh = score(missing, scorer, store_);
  for (const auto& s : fresh.scores) cache.insert_or_assign(s.image_id, s);

  std::vector<ScoreRecord> out;
  for (const auto& d : gates) {
    if (!d.passed) continue;
    if (auto it = cache.find(d.image_id); it != cache.end()) out.push_back(it->second);
  }
  fs::create_directories(run_dir() / "scores");
  write_score_log(run_dir() / "scores" / (scores_key(scorer.model_id()) + ".jsonl"), out);
  return out;
}

std::optional<double> Pipeline::effective_threshold() const {
  if (config_.threshold) return config_.threshold;
  if (auto cal = load_calibration()) return cal->choice.threshold;
  return std::nullopt;
}

RunReport Pipeline::run_detection(const FaceDetector& detector, const ImageScorer& scorer) {
  std::lock_guard lock(mutex_);
  RunReport report;
  report.corpus_id = config_.corpus_id;
  report.model_id = scorer.model_id();
  report.corpus_images = manifest().records.size();
  for (const auto& r : manifest().records) ++report.role_counts[r.role];

  const auto gates = gate(detector);
  report.considered = gates.size();
  report.gate = count_decisions(gates);

  const auto scores = score_gated(gates, scorer);
  report.scores.count = scores.size();
  report.scores.histogram.assign(10, 0);
  if (!scores.empty()) {
    std::vector<double> v;
    for (const auto& s : scores) v.push_back(s.score);
    std::sort(v.begin(), v.end());
    report.scores.min = v.front();
    report.scores.max = v.back();
    double sum = 0.0;
    for (double x : v) sum += x;
    report.scores.mean = sum / static_cast<double>(v.size());
    const std::size_t n = v.size();
    report.scores.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    for (double x : v) ++report.scores.histogram[std::min<std::size_t>(9, static_cast<std::size_t>(x * 10.0))];
  }

  report.threshold = effective_threshold();
  if (report.threshold) {
    std::vector<const ScoreRecord*> fakes;
    for (const auto& s : scores) {
      if (s.score >= *report.threshold) fakes.push_back(&s);
    }
    report.classified_fake = fakes.size();
    std::string listing;
    for (const auto* s : fakes) listing += fmt::format("{}\t{}\n", s->image_id, s->score);
    write_file_atomic(run_dir() / "classified_fake.txt", listing);
    report.status = "complete";
  } else {
    report.status = "calibration required";
  }
  report.calibration = load_calibration();

  if (const fs::path p = run_dir() / "dedup_stats.json"; fs::exists(p)) {
    const json j = json::parse(read_file_text(p));
    report.dedup = DedupStats{j.at("hashed").get<std::size_t>(), j.at("clusters").get<std::size_t>(),
                              j.at("clustered_images").get<std::size_t>(), j.at("largest").get<std::size_t>(),
                              j.at("mean_size").get<double>()};
  }
  report.analytics = analytics_json();
  report.generated_at = now_utc();
  write_file_atomic(run_dir() / "report.json", report.to_json());
  return report;
}

RunReport Pipeline::run_detection() {
  if (config_.model_id.empty()) throw ConfigError("model_id is required for detection");
  const auto detector = make_face_detector(config_.face_detector_spec());
  const ModelRegistry registry(config_.workspace);
  const ResNetScorer scorer(registry.load(config_.model_id));
  return run_detection(*detector, scorer);
}

LabelingSubset Pipeline::subset() {
  std::lock_guard lock(mutex_);
  const fs::path path = run_dir() / "subset.json";
  if (!fs::exists(path)) return rebuild_subset();
  const json j = json::parse(read_file_text(path));
  LabelingSubset s;
  s.ids = j.at("ids").get<std::vector<std::string>>();
  s.scores = j.at("scores").get<std::vector<double>>();
  s.population = j.at("population").get<std::size_t>();
  s.sampled = j.at("sampled").get<std::size_t>();
  s.eligible = j.at("eligible").get<std::size_t>();
  if (!j.at("score_max").is_null()) s.score_max = j.at("score_max").get<double>();
  if (!j.at("score_min").is_null()) s.score_min = j.at("score_min").get<double>();
  s.warning = j.value("warning", std::string());
  return s;
}

LabelingSubset Pipeline::rebuild_subset() {
  std::lock_guard lock(mutex_);
  if (config_.model_id.empty()) throw ConfigError("model_id is required for the labeling subset");
  const auto gates = cached_gates();
  if (gates.empty()) throw Error("no gate decisions yet; run prefilter first");
  const auto scores = cached_scores(config_.model_id);
  const LabelingSubset s =
      labeling_subset(scores, gates, config_.subset_fraction, config_.subset_top_k, config_.seed);
  const json j{{"model_id", config_.model_id},
               {"fraction", config_.subset_fraction},
               {"top_k", config_.subset_top_k},
               {"seed", config_.seed},
               {"ids", s.ids},
               {"scores", s.scores},
               {"population", s.population},
               {"sampled", s.sampled},
               {"eligible", s.eligible},
               {"score_max", s.score_max ? json(*s.score_max) : json(nullptr)},
               {"score_min", s.score_min ? json(*s.score_min) : json(nullptr)},
               {"warning", s.warning}};
  // An empty subset is not frozen; the next call retries once scores exist.
  if (s.ids.empty()) return s;
  fs::create_directories(run_dir());
  write_file_atomic(run_dir() / "subset.json", j.dump(2) + "\n");
  return s;
}

std::vector<LabelEvent> Pipeline::label_events() const {
  std::lock_guard lock(mutex_);
  std::vector<LabelEvent> out;
  const fs::path path = run_dir() / "labels.jsonl";
  if (!fs::exists(path)) return out;
  std::istringstream in{read_file_text(path)};
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(label_event_from_json_line(line));
  }
  return out;
}

std::vector<QueueItem> Pipeline::labeling_queue(std::size_t n) {
  std::lock_guard lock(mutex_);
  std::vector<QueueItem> out;
  if (n == 0) return out;
  const auto s = subset();
  const auto events = label_events();
  const LabelView view(events);
  const auto ref = alignment_reference();
  std::map<std::string, GateDecision> gates;
  if (ref) gates = index_by_id(cached_gates());
  for (std::size_t i = 0; i < s.ids.size() && out.size() < n; ++i) {
    if (view.per_image().contains(s.ids[i])) continue;
    QueueItem item{s.ids[i], s.scores[i], false, has_composite(s.ids[i])};
    if (ref) {
      const auto it = gates.find(s.ids[i]);
      item.aligned = it != gates.end() && it->second.passed && it->second.geometry &&
                     is_aligned(*it->second.geometry, *ref, config_.alignment_k);
    }
    out.push_back(std::move(item));
  }
  return out;
}

void Pipeline::submit_label(const LabelEvent& event) {
  std::lock_guard lock(mutex_);
  if (event.annotator_id.empty()) throw Error("annotator_id is required");
  const auto s = subset();
  if (std::find(s.ids.begin(), s.ids.end(), event.image_id) == s.ids.end()) {
    throw Error(fmt::format("image {} is not in the labeling subset", event.image_id));
  }
  fs::create_directories(run_dir());
  std::ofstream out(run_dir() / "labels.jsonl", std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot open the label log for appending");
  out << label_event_to_json_line(event);
  out.flush();
  if (!out) throw Error("failed to append to the label log");
}

Progress Pipeline::progress() {
  std::lock_guard lock(mutex_);
  const auto s = subset();
  const auto events = label_events();
  const LabelView view(events);
  Progress p;
  for (auto l : {Label::REAL, Label::FAKE, Label::UNSURE}) p.per_label[l] = 0;
  for (const auto& id : s.ids) {
    if (const auto it = view.per_image().find(id); it != view.per_image().end()) {
      ++p.labeled;
      ++p.per_label[it->second.label];
    }
  }
  p.remaining = s.ids.size() - p.labeled;
  return p;
}

CalibrationOutcome Pipeline::calibrate_and_estimate() {
  std::lock_guard lock(mutex_);
  const auto s = subset();
  const auto events = label_events();
  const LabelView view(events);
  std::vector<LabeledScore> labeled;
  std::map<Label, std::size_t> counts{{Label::REAL, 0}, {Label::FAKE, 0}};
  for (std::size_t i = 0; i < s.ids.size(); ++i) {
    const auto it = view.per_image().find(s.ids[i]);
    if (it == view.per_image().end() || it->second.label == Label::UNSURE) continue;
    labeled.push_back({s.ids[i], s.scores[i], it->second.label});
    ++counts[it->second.label];
  }
  for (auto l : {Label::REAL, Label::FAKE}) {
    if (counts[l] < 2) {
      throw Error(fmt::format("calibration needs at least two {} labels, have {}", to_string(l), counts[l]));
    }
  }
  std::sort(labeled.begin(), labeled.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.image_id < b.image_id; });
  const LabeledSplit split = split_labeled(labeled, config_.seed);
  CalibrationOutcome o;
  o.choice = choose_threshold(split.validation);
  o.errors = error_rates(split.test, o.choice.threshold);
  o.auc = auc(labeled);
  o.n_validation = split.validation.size();
  o.n_test = split.test.size();
  o.labels_used = counts;
  fs::create_directories(run_dir());
  write_file_atomic(run_dir() / "calibration.json", o.to_json());
  write_file_atomic(run_dir() / "calibration_roc.csv", roc_csv(roc_curve(split.validation)));
  write_file_atomic(run_dir() / "calibration_pr.csv", pr_csv(pr_curve(split.validation)));
  return o;
}

std::optional<CalibrationOutcome> Pipeline::load_calibration() const {
  const fs::path path = run_dir() / "calibration.json";
  if (!fs::exists(path)) return std::nullopt;
  return CalibrationOutcome::from_json(read_file_text(path));
}

AlignmentReference Pipeline::fit_alignment(const FaceDetector& detector) {
  std::lock_guard lock(mutex_);
  const auto records = manifest().select(DatasetRole::FAKE_PROC, Split::TRAIN);
  if (records.empty()) throw Error("alignment reference needs FAKE_PROC images in the TRAIN split");
  std::vector<FaceGeometry> geometries;
  for (const auto* r : records) {
    const auto faces = detector.detect(*r, store_.load_image(*r));
    if (auto primary = select_primary_face(faces)) geometries.push_back(*primary);
  }
  if (geometries.empty()) throw Error("no faces found in the FAKE_PROC training images");
  const AlignmentReference ref = fit_alignment_reference(geometries, config_.alignment_k, config_.corpus_id);
  fs::create_directories(run_dir());
  save_alignment_reference(run_dir() / "alignment_ref.json", ref);
  return ref;
}

std::optional<AlignmentReference> Pipeline::alignment_reference() const {
  const fs::path path = config_.alignment_ref.empty() ? run_dir() / "alignment_ref.json" : config_.alignment_ref;
  if (!fs::exists(path)) return std::nullopt;
  return load_alignment_reference(path);
}

bool Pipeline::is_image_aligned(std::string_view image_id) {
  std::lock_guard lock(mutex_);
  const auto ref = alignment_reference();
  if (!ref) return false;
  for (const auto& d : cached_gates()) {
    if (d.image_id == image_id) return d.passed && d.geometry && is_aligned(*d.geometry, *ref, config_.alignment_k);
  }
  return false;
}

std::vector<InversionJob> Pipeline::invert_images(std::span<const std::string> ids, const GeneratorAdapter& generator,
                                                  const PerceptualDistance& perceptual) {
  std::vector<InversionJob> jobs;
  for (const auto& id : ids) {
    InversionJob job{id, false, {}};
    cv::Mat original;
    {
      std::lock_guard lock(mutex_);
      const ImageRecord* r = manifest().find(id);
      if (!r) {
        job.reason = "unknown image";
      } else if (!is_image_aligned(id)) {
        job.reason = "not aligned";
      } else {
        original = store_.load_image(*r);
      }
    }
    if (original.empty()) {
      jobs.push_back(std::move(job));
      continue;
    }
    InversionConfig cfg;
    cfg.steps = config_.inversion_steps;
    cfg.seed = mix_seed(config_.seed, std::stoull(id.substr(0, 16), nullptr, 16));
    const InversionResult result = invert(id, original, generator, perceptual, cfg);
    save_inversion(run_dir() / "inversions", result, original);
    job.ran = true;
    jobs.push_back(std::move(job));
  }
  return jobs;
}

fs::path Pipeline::composite_path(std::string_view image_id) const {
  return run_dir() / "inversions" / (std::string(image_id) + "_sbs.jpg");
}

bool Pipeline::has_composite(std::string_view image_id) const { return fs::exists(composite_path(image_id)); }

std::optional<InversionResult> Pipeline::inversion(std::string_view image_id) const {
  const fs::path path = run_dir() / "inversions" / (std::string(image_id) + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return inversion_from_json(read_file_text(path));
}

std::vector<DuplicateCluster> Pipeline::dedup(std::span<const std::string> ids) {
  std::lock_guard lock(mutex_);
  std::map<std::string, std::uint64_t> cache;
  const fs::path csv = run_dir() / "phashes.csv";
  if (fs::exists(csv)) {
    for (const auto& h : parse_phashes_csv(read_file_text(csv))) cache[h.image_id] = h.bits;
  }
  std::vector<std::string> wanted(ids.begin(), ids.end());
  if (wanted.empty()) {
    for (const auto& r : manifest().records) wanted.push_back(r.id);
  }
  std::vector<PerceptualHash> hashes;
  for (const auto& id : wanted) {
    if (auto it = cache.find(id); it != cache.end()) {
      hashes.push_back({id, it->second});
      continue;
    }
    const ImageRecord* r = manifest().find(id);
    if (!r) throw Error(fmt::format("dedup: unknown image {}", id));
    try {
      auto h = phash(id, store_.load_bytes(*r));
      cache[id] = h.bits;
      hashes.push_back(std::move(h));
    } catch (const DecodeError&) {
      // undecodable images cannot be hashed; they stay out of the clustering
    }
  }
  std::vector<PerceptualHash> all;
  for (const auto& [id, bits] : cache) all.push_back({id, bits});
  fs::create_directories(run_dir());
  write_file_atomic(csv, phashes_csv(all));

  const auto clusters = cluster(hashes, config_.dedup_eps, config_.dedup_min_samples);
  const ClusterReport report = cluster_report(clusters);
  write_file_atomic(run_dir() / "dup_clusters.json",
                    clusters_to_json(clusters, config_.dedup_eps, config_.dedup_min_samples, hashes.size()));
  write_file_atomic(run_dir() / "dup_clusters.csv", report.csv);
  std::size_t largest = 0;
  for (const auto& c : clusters) largest = std::max(largest, c.member_ids.size());
  const json stats{{"hashed", hashes.size()},
                   {"clusters", clusters.size()},
                   {"clustered_images", report.clustered_images},
                   {"largest", largest},
                   {"mean_size", clusters.empty() ? 0.0
                                                  : static_cast<double>(report.clustered_images) /
                                                        static_cast<double>(clusters.size())},
                   {"size_histogram", report.size_histogram}};
  write_file_atomic(run_dir() / "dedup_stats.json", stats.dump(2) + "\n");
  return clusters;
}

std::string Pipeline::analytics_json() const { return account_analytics_json(config_); }

std::string account_analytics_json(const PipelineConfig& config) {
  if (config.accounts_path.empty()) return {};
  const auto accounts = read_accounts(config.accounts_path);
  if (accounts.empty()) return {};
  Timestamp collected = accounts.front().created_at;
  if (config.collected_at) {
    collected = *config.collected_at;
  } else {
    for (const auto& a : accounts) collected = std::max(collected, a.created_at);
  }
  json groups = json::object();
  for (auto group : {AccountGroup::REAL_IMAGE, AccountGroup::FAKE_IMAGE}) {
    std::vector<AccountRecord> members;
    for (const auto& a : accounts) {
      if (a.group == group) members.push_back(a);
    }
    if (members.empty()) continue;
    json g{{"accounts", members.size()}};
    for (auto m : {Metric::FOLLOWERS, Metric::FOLLOWING, Metric::TWEETS, Metric::LISTED, Metric::TWEETS_PER_DAY}) {
      g["summary"][std::string(to_string(m))] = json::parse(metric_summary_to_json(metric_summary(members, m, collected)));
    }
    for (auto m : {Metric::FOLLOWERS, Metric::FOLLOWING}) {
      json spikes = json::array();
      for (const auto& s : exact_value_spikes(members, m, 0.05, collected)) {
        spikes.push_back({{"value", s.value}, {"count", s.count}, {"share", s.share}});
      }
      g["spikes"][std::string(to_string(m))] = spikes;
    }
    json windows = json::array();
    for (const auto& w : bulk_creation_windows(members, std::chrono::hours(config.bulk_window_hours),
                                               config.bulk_min_count)) {
      windows.push_back({{"start", format_timestamp(w.start)},
                         {"end", format_timestamp(w.end)},
                         {"count", w.count},
                         {"peak", w.peak}});
    }
    g["bulk_creation"] = windows;
    if (!config.statuses_path.empty()) {
      const auto checks = read_status_checks(config.statuses_path);
      const StatusShares shares = status_breakdown(checks, accounts, group);
      json st = json::object();
      for (const auto& [status, share] : shares.shares) {
        st[std::string(to_string(status))] = {{"count", shares.counts.at(status)}, {"share", share}};
      }
      g["status"] = st;
    }
    groups[std::string(to_string(group))] = g;
  }
  const json j{{"collected_at", format_timestamp(collected)}, {"groups", groups}};
  return j.dump();
}

}  // namespace ganwild
