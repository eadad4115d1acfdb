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

#ifndef GANWILD_DETECTOR_HPP_
#define GANWILD_DETECTOR_HPP_

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "ganwild/augment.hpp"
#include "ganwild/ingest.hpp"
#include "ganwild/nn.hpp"
#include "ganwild/scores.hpp"

namespace ganwild {

// Detector variants compared in the ablation:
//   C_RF        trained on REAL / FAKE resized to the platform size
//   C_RX_FX     trained on REAL_PROC / FAKE_PROC
//   C_RX_PX_FX  additionally uses PROXY_REAL as real, with balanced sampling
enum class DetectorVariant { C_RF, C_RX_FX, C_RX_PX_FX };
std::string_view to_string(DetectorVariant variant);
DetectorVariant parse_variant(std::string_view text);

struct TrainConfig {
  std::set<DatasetRole> real_roles;
  std::set<DatasetRole> fake_roles;
  int batch_size = 32;
  double initial_lr = 1e-4;
  double lr_decay_factor = 10.0;
  double plateau_delta = 0.001;
  int plateau_patience_epochs = 5;
  double stop_lr = 1e-6;
  bool balanced_sampling = false;
  int crop_size = 224;
  // Resize every image to resize_to x resize_to before augmentation; 0 keeps
  // the stored size.
  int resize_to = 0;
  AugmentationConfig augmentations;
  std::uint64_t seed = 0;
  // Safety cap; 0 means the learning-rate schedule alone ends training.
  int max_epochs = 0;
  nn::BackboneConfig backbone;
  // Optional generic pretraining checkpoint; matching backbone tensors are
  // loaded, the head stays freshly initialized.
  std::string pretrained_weights;

  // Throws ConfigError.
  void validate() const;
  static TrainConfig for_variant(DetectorVariant variant);
  std::string to_json() const;
  // Throws ConfigError.
  static TrainConfig from_json(std::string_view text);
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct ModelHandle {
  std::string model_id;
  DetectorVariant variant = DetectorVariant::C_RX_PX_FX;
  fs::path weights_path;
  TrainConfig train_config;
  std::vector<EpochLog> train_log;
  double final_lr = 0.0;
  bool stopped_by_schedule = false;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// models/<model_id>/{config.json, weights.bin, trainlog.jsonl}
class ModelRegistry {
 public:
  explicit ModelRegistry(fs::path workspace) : root_(std::move(workspace) / "models") {}
  fs::path model_dir(std::string_view model_id) const { return root_ / std::string(model_id); }
  bool exists(std::string_view model_id) const;
  void save(ModelHandle& handle, nn::ResNetClassifier& model) const;
  ModelHandle load(std::string_view model_id) const;

 private:
  fs::path root_;
};

// Encoded image plus binary target (1 = fake).
struct TrainingSample {
  std::string image_id;
  std::shared_ptr<const std::vector<std::uint8_t>> bytes;
  float target = 0.0f;
  bool proxy = false;  // PROXY_REAL sample, for balanced-sampling bookkeeping
};

// Sample order of one epoch. With balanced sampling the epoch is one pass
// over the fake samples plus an equal number of real samples drawn without
// replacement (cycling when the real pool is smaller).
std::vector<std::size_t> epoch_order(std::span<const TrainingSample> samples, bool balanced, Rng& rng);

// Image -> normalized CHW float for the network. Training uses a random crop,
// evaluation the center crop.
void preprocess_into(const cv::Mat& image, int crop_size, int resize_to, Rng* random_crop, float* out);

struct TrainResult {
  std::vector<EpochLog> log;
  bool stopped_by_schedule = false;
  double final_lr = 0.0;  // after the last epoch's schedule update
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Learning rate drops by lr_decay_factor whenever the validation loss has not
// improved by plateau_delta for plateau_patience_epochs consecutive epochs;
// training stops at the end of the first epoch after which lr < stop_lr.
TrainResult train_model(nn::ResNetClassifier& model, std::span<const TrainingSample> train,
                        std::span<const TrainingSample> validation, const TrainConfig& config,
                        const EpochCallback& on_epoch = {});

// Trains on the manifest's TRAIN split, validates on VAL, and writes the
// model into the registry.
ModelHandle train(const CorpusManifest& manifest, const CorpusStore& store, const TrainConfig& config,
                  DetectorVariant variant, std::string model_id, const ModelRegistry& registry,
                  const EpochCallback& on_epoch = {});

// Slot for anything that maps an image to a fake score in [0, 1], including
// third-party detectors wrapped by the caller.
class ImageScorer {
 public:
  virtual ~ImageScorer() = default;
  virtual std::string model_id() const = 0;
  virtual double score(const cv::Mat& image) const = 0;
};

class ResNetScorer final : public ImageScorer {
 public:
  explicit ResNetScorer(const ModelHandle& handle);
  std::string model_id() const override { return model_id_; }
  double score(const cv::Mat& image) const override;
  std::vector<double> score_batch(std::span<const cv::Mat> images) const;

 private:
  std::string model_id_;
  int crop_size_;
  int resize_to_;
  mutable std::mutex mutex_;
  mutable nn::ResNetClassifier model_;
};

struct ScoreRun {
  std::vector<ScoreRecord> scores;
  std::vector<std::string> skipped;  // undecodable image ids
};

ScoreRun score(std::span<const ImageRecord> images, const ImageScorer& scorer, const CorpusStore& store);

struct Condition {
  DatasetRole real_role;
  DatasetRole fake_role;
  std::string label() const;
};

// (a) REAL_PROC vs FAKE_PROC, (b) REAL_ZOOM vs FAKE_ZOOM, (c) PROXY_REAL vs FAKE_PROC.
std::vector<Condition> default_conditions();

struct AblationTable {
  std::vector<std::string> models;
  std::vector<Condition> conditions;
  // auc[condition][model]; empty when a test split or scores are missing.
  std::vector<std::vector<std::optional<double>>> auc;

  std::string to_text() const;
  std::string to_json() const;
};

// AUC of each model on each condition's TEST split.
AblationTable ablation_report(std::span<const std::string> model_ids, std::span<const Condition> conditions,
                              const CorpusManifest& manifest,
                              const std::map<std::string, std::vector<ScoreRecord>>& scores_by_model);

}  // namespace ganwild

#endif  // GANWILD_DETECTOR_HPP_
