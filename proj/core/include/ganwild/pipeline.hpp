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

#ifndef GANWILD_PIPELINE_HPP_
#define GANWILD_PIPELINE_HPP_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ganwild/accounts.hpp"
#include "ganwild/assist.hpp"
#include "ganwild/calibrate.hpp"
#include "ganwild/dedup.hpp"
#include "ganwild/detector.hpp"
#include "ganwild/facegate.hpp"
#include "ganwild/ingest.hpp"
#include "ganwild/inversion.hpp"

namespace ganwild {

// Key-value text file, one `key = value` per line, `#` starts a comment:
//
//   workspace = /data/ganwild
//   corpus_id = wild2023
//   model_id = c_rx_px_fx
//   face_detector = sidecar:/data/faces     (default sidecar:<workspace>/faces)
//   detect_roles = WILD                     (comma separated)
//   min_eye_distance = 0.1
//   alignment_k = 7
//   alignment_ref = ref.json                (default runs/<corpus>/alignment_ref.json)
//   threshold = 0.98                        (normally set by calibration)
//   subset.fraction = 0.1
//   subset.top_k = 1000
//   dedup.eps = 3
//   dedup.min_samples = 2
//   content.threshold = 0.6
//   content.min_cluster_size = 50
//   generator = toy
//   inversion.steps = 1000
//   accounts = accounts.jsonl               (optional analytics inputs)
//   statuses = status.csv
//   bulk.window_hours = 24
//   bulk.min_count = 100
//   collected_at = 2023-03-01T00:00:00Z
//   seed = 0
//   service.host = 127.0.0.1
//   service.port = 8080
struct PipelineConfig {
  fs::path workspace = ".";
  std::string corpus_id;
  std::string model_id;
  std::string face_detector;
  std::set<DatasetRole> detect_roles = {DatasetRole::WILD};
  double min_eye_distance = kDefaultMinEyeDistance;
  int alignment_k = kDefaultAlignmentK;
  fs::path alignment_ref;
  std::optional<double> threshold;
  double subset_fraction = 0.1;
  std::size_t subset_top_k = 1000;
  int dedup_eps = kDefaultDedupEps;
  int dedup_min_samples = kDefaultDedupMinSamples;
  double content_threshold = 0.6;
  std::size_t content_min_cluster_size = 50;
  std::string generator = "toy";
  int inversion_steps = 1000;
  fs::path accounts_path;
  fs::path statuses_path;
  int bulk_window_hours = 24;
  std::size_t bulk_min_count = 100;
  std::optional<Timestamp> collected_at;
  std::uint64_t seed = 0;
  std::string service_host = "127.0.0.1";
  int service_port = 8080;

  // Throws ConfigError naming the line.
  static PipelineConfig parse(std::string_view text);
  static PipelineConfig load(const fs::path& path);
  std::string to_text() const;
  void validate() const;
  std::string face_detector_spec() const;
};

// Per-group metric summaries, value spikes, bulk-creation windows and status
// shares from config.accounts_path / statuses_path; empty without accounts.
std::string account_analytics_json(const PipelineConfig& config);

struct AssistSeen {
  bool alignment = false;
  bool inversion_composite = false;
};

struct LabelEvent {
  std::string image_id;
  std::string annotator_id;
  Label label = Label::UNSURE;
  Timestamp labeled_at{};
  AssistSeen assist_seen;
};

std::string label_event_to_json_line(const LabelEvent& event);
LabelEvent label_event_from_json_line(std::string_view line);

// Pure fold over an append-only event list.
class LabelView {
 public:
  explicit LabelView(std::span<const LabelEvent> events);
  // Latest event per (image, annotator).
  const std::map<std::pair<std::string, std::string>, LabelEvent>& per_annotator() const { return per_annotator_; }
  // Latest event per image across annotators.
  const std::map<std::string, LabelEvent>& per_image() const { return per_image_; }
  // Images whose annotators currently disagree.
  std::vector<std::string> conflicts() const;

 private:
  std::map<std::pair<std::string, std::string>, LabelEvent> per_annotator_;
  std::map<std::string, LabelEvent> per_image_;
};

struct QueueItem {
  std::string image_id;
  double score = 0.0;
  bool aligned = false;
  bool has_composite = false;
};

struct Progress {
  std::size_t labeled = 0;
  std::size_t remaining = 0;
  std::map<Label, std::size_t> per_label;
};

struct CalibrationOutcome {
  ThresholdChoice choice;
  ErrorEstimate errors;
  std::optional<double> auc;  // over all labeled images
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  std::map<Label, std::size_t> labels_used;

  std::string to_json() const;
  static CalibrationOutcome from_json(std::string_view text);
};

struct ScoreSummary {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  std::vector<std::size_t> histogram;  // 10 equal bins over [0, 1]
};

struct DedupStats {
  std::size_t hashed = 0;
  std::size_t clusters = 0;
  std::size_t clustered_images = 0;
  std::size_t largest = 0;
  double mean_size = 0.0;
};

struct RunReport {
  std::string corpus_id;
  std::string model_id;
  std::size_t corpus_images = 0;
  std::map<DatasetRole, std::size_t> role_counts;
  std::size_t considered = 0;  // images with a detect role
  GateCounts gate;
  ScoreSummary scores;
  std::optional<double> threshold;
  std::optional<std::size_t> classified_fake;
  std::optional<CalibrationOutcome> calibration;
  std::optional<DedupStats> dedup;
  std::string analytics;  // JSON object, empty when no account data is configured
  std::string status;     // "complete" or "calibration required"
  Timestamp generated_at{};

  std::string to_json() const;
};

struct InversionJob {
  std::string image_id;
  bool ran = false;
  std::string reason;  // why it was skipped
};

// Workspace layout for one corpus under <workspace>/runs/<corpus_id>/:
//   gates.jsonl             gate decisions by image id
//   scores/<model>.jsonl    scores by image id
//   subset.json             labeling subset
//   labels.jsonl            append-only label events
//   calibration.json        threshold choice and error estimate
//   alignment_ref.json
//   inversions/             <id>.json, <id>_sbs.jpg
//   phashes.csv, dup_clusters.json, dup_clusters.csv
//   classified_fake.txt, report.json
// Cache entries are keyed by content hash, so editing an image only
// invalidates its own entries. Corpora are never written.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  fs::path run_dir() const;
  const CorpusStore& store() const { return store_; }
  const CorpusManifest& manifest() const;
  std::vector<ImageRecord> detect_records() const;

  // Gate decisions for detect_records(), reusing cached ones.
  std::vector<GateDecision> gate(const FaceDetector& detector);
  // Scores for the gated images, reusing cached ones for scorer.model_id().
  std::vector<ScoreRecord> score_gated(std::span<const GateDecision> gates, const ImageScorer& scorer);

  // gate -> score -> classify. Without a threshold (config or calibration
  // file) it stops after scoring with status "calibration required".
  RunReport run_detection(const FaceDetector& detector, const ImageScorer& scorer);
  RunReport run_detection();

  std::optional<double> effective_threshold() const;

  // Built from the cached gates and scores on first use, then persisted
  // unless empty.
  LabelingSubset subset();
  LabelingSubset rebuild_subset();
  std::vector<QueueItem> labeling_queue(std::size_t n);
  // Throws Error for images outside the subset.
  void submit_label(const LabelEvent& event);
  std::vector<LabelEvent> label_events() const;
  Progress progress();

  // Throws Error naming a class with fewer than two labels.
  CalibrationOutcome calibrate_and_estimate();
  std::optional<CalibrationOutcome> load_calibration() const;

  AlignmentReference fit_alignment(const FaceDetector& detector);
  std::optional<AlignmentReference> alignment_reference() const;
  // Needs a passing gate decision and a stored reference.
  bool is_image_aligned(std::string_view image_id);

  // Inverts only aligned images; others are reported as skipped.
  std::vector<InversionJob> invert_images(std::span<const std::string> ids, const GeneratorAdapter& generator,
                                          const PerceptualDistance& perceptual);
  bool has_composite(std::string_view image_id) const;
  fs::path composite_path(std::string_view image_id) const;
  std::optional<InversionResult> inversion(std::string_view image_id) const;

  // pHash every image in `ids` (all manifest images when empty), reusing
  // phashes.csv, then cluster.
  std::vector<DuplicateCluster> dedup(std::span<const std::string> ids = {});

  // Analytics bundle from the configured account and status files.
  std::string analytics_json() const;

 private:
  std::vector<GateDecision> cached_gates() const;
  std::vector<ScoreRecord> cached_scores(const std::string& model_id) const;

  PipelineConfig config_;
  CorpusStore store_;
  mutable std::optional<CorpusManifest> manifest_;
  mutable std::recursive_mutex mutex_;
};

}  // namespace ganwild

#endif  // GANWILD_PIPELINE_HPP_
