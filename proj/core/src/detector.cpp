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

#include "ganwild/detector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include <fmt/format.h>

#include "ganwild/calibrate.hpp"
#include "ganwild/image.hpp"
#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

constexpr float kMean[3] = {0.485f, 0.456f, 0.406f};
constexpr float kStd[3] = {0.229f, 0.224f, 0.225f};

json roles_to_json(const std::set<DatasetRole>& roles) {
  json arr = json::array();
  for (auto r : roles) arr.push_back(to_string(r));
  return arr;
}

std::set<DatasetRole> roles_from_json(const json& j) {
  std::set<DatasetRole> roles;
  for (const auto& r : j) roles.insert(parse_role(r.get<std::string>()));
  return roles;
}

json augment_to_json(const AugmentationConfig& a) {
  return json{{"probability", a.probability},
              {"blur_kernel", a.blur_kernel},
              {"blur_sigma", {a.blur_sigma_min, a.blur_sigma_max}},
              {"jpeg_quality", {a.jpeg_quality_min, a.jpeg_quality_max}},
              {"resize_scale", {a.resize_scale_min, a.resize_scale_max}},
              {"resize_aspect", {a.resize_aspect_min, a.resize_aspect_max}}};
}

AugmentationConfig augment_from_json(const json& j) {
  AugmentationConfig a;
  a.probability = j.at("probability").get<double>();
  a.blur_kernel = j.at("blur_kernel").get<int>();
  a.blur_sigma_min = j.at("blur_sigma").at(0).get<double>();
  a.blur_sigma_max = j.at("blur_sigma").at(1).get<double>();
  a.jpeg_quality_min = j.at("jpeg_quality").at(0).get<int>();
  a.jpeg_quality_max = j.at("jpeg_quality").at(1).get<int>();
  a.resize_scale_min = j.at("resize_scale").at(0).get<double>();
  a.resize_scale_max = j.at("resize_scale").at(1).get<double>();
  a.resize_aspect_min = j.at("resize_aspect").at(0).get<double>();
  a.resize_aspect_max = j.at("resize_aspect").at(1).get<double>();
  return a;
}

json backbone_to_json(const nn::BackboneConfig& b) {
  json stages = json::array();
  for (const auto& s : b.stages) stages.push_back({{"channels", s.channels}, {"blocks", s.blocks}, {"stride", s.stride}});
  return json{{"in_channels", b.in_channels},
              {"stem_channels", b.stem_channels},
              {"stem_kernel", b.stem_kernel},
              {"stem_stride", b.stem_stride},
              {"stages", stages}};
}

nn::BackboneConfig backbone_from_json(const json& j) {
  nn::BackboneConfig b;
  b.in_channels = j.at("in_channels").get<int>();
  b.stem_channels = j.at("stem_channels").get<int>();
  b.stem_kernel = j.at("stem_kernel").get<int>();
  b.stem_stride = j.at("stem_stride").get<int>();
  b.stages.clear();
  for (const auto& s : j.at("stages")) {
    b.stages.push_back({s.at("channels").get<int>(), s.at("blocks").get<int>(), s.at("stride").get<int>()});
  }
  return b;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"real_roles", roles_to_json(c.real_roles)},
              {"fake_roles", roles_to_json(c.fake_roles)},
              {"batch_size", c.batch_size},
              {"optimizer", "adam"},
              {"initial_lr", c.initial_lr},
              {"loss", "binary_cross_entropy"},
              {"lr_decay_factor", c.lr_decay_factor},
              {"plateau_delta", c.plateau_delta},
              {"plateau_patience_epochs", c.plateau_patience_epochs},
              {"stop_lr", c.stop_lr},
              {"balanced_sampling", c.balanced_sampling},
              {"crop_size", c.crop_size},
              {"resize_to", c.resize_to},
              {"augmentations", augment_to_json(c.augmentations)},
              {"seed", c.seed},
              {"max_epochs", c.max_epochs},
              {"backbone", backbone_to_json(c.backbone)},
              {"pretrained_weights", c.pretrained_weights}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.real_roles = roles_from_json(j.at("real_roles"));
  c.fake_roles = roles_from_json(j.at("fake_roles"));
  c.batch_size = j.at("batch_size").get<int>();
  c.initial_lr = j.at("initial_lr").get<double>();
  c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
  c.plateau_delta = j.at("plateau_delta").get<double>();
  c.plateau_patience_epochs = j.at("plateau_patience_epochs").get<int>();
  c.stop_lr = j.at("stop_lr").get<double>();
  c.balanced_sampling = j.at("balanced_sampling").get<bool>();
  c.crop_size = j.at("crop_size").get<int>();
  c.resize_to = j.value("resize_to", 0);
  c.augmentations = augment_from_json(j.at("augmentations"));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_epochs = j.value("max_epochs", 0);
  c.backbone = backbone_from_json(j.at("backbone"));
  c.pretrained_weights = j.value("pretrained_weights", std::string());
  return c;
}

cv::Mat prepare_geometry(const cv::Mat& image, int crop_size, int resize_to) {
  cv::Mat img = image;
  if (resize_to > 0 && (img.cols != resize_to || img.rows != resize_to)) img = resize_bilinear(img, resize_to, resize_to);
  const int min_side = std::min(img.cols, img.rows);
  if (min_side < crop_size) {
    const double s = static_cast<double>(crop_size) / min_side;
    img = resize_bilinear(img, std::max(crop_size, static_cast<int>(std::ceil(img.cols * s))),
                          std::max(crop_size, static_cast<int>(std::ceil(img.rows * s))));
  }
  return img;
}

struct Batch {
  nn::Tensor x;
  std::vector<float> targets;
};

double evaluate_loss(nn::ResNetClassifier& model, const nn::Tensor& x, std::span<const float> targets, int batch_size) {
  if (targets.empty()) return 0.0;
  const int n = x.shape.n;
  double total = 0.0;
  for (int start = 0; start < n; start += batch_size) {
    const int b = std::min(batch_size, n - start);
    nn::Tensor chunk({b, x.shape.c, x.shape.h, x.shape.w});
    std::copy(x.sample(start), x.sample(start) + chunk.data.size(), chunk.data.begin());
    const nn::Tensor logits = model.forward(chunk, false);
    total += nn::bce_with_logits(logits.data, targets.subspan(start, b), nullptr) * b;
  }
  return total / n;
}

}  // namespace

std::string_view to_string(DetectorVariant variant) {
  switch (variant) {
    case DetectorVariant::C_RF: return "c_rf";
    case DetectorVariant::C_RX_FX: return "c_rx_fx";
    case DetectorVariant::C_RX_PX_FX: return "c_rx_px_fx";
  }
  return "c_rx_px_fx";
}

DetectorVariant parse_variant(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "c_rf") return DetectorVariant::C_RF;
  if (lower == "c_rx_fx") return DetectorVariant::C_RX_FX;
  if (lower == "c_rx_px_fx") return DetectorVariant::C_RX_PX_FX;
  throw ConfigError(fmt::format("unknown detector variant '{}'", text));
}

std::string TrainConfig::to_json() const { return train_config_to_json(*this).dump(2); }

TrainConfig TrainConfig::from_json(std::string_view text) {
  try {
    return train_config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad train config: {}", e.what()));
  }
}

void TrainConfig::validate() const {
  if (real_roles.empty() || fake_roles.empty()) throw ConfigError("train config needs real and fake roles");
  for (auto r : real_roles) {
    if (fake_roles.contains(r)) throw ConfigError(fmt::format("role {} is both real and fake", to_string(r)));
  }
  if (real_roles.contains(DatasetRole::REAL_PROC) && real_roles.contains(DatasetRole::PROXY_REAL) &&
      !balanced_sampling) {
    throw ConfigError("training on REAL_PROC and PROXY_REAL requires balanced_sampling");
  }
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
  if (!(lr_decay_factor > 1.0)) throw ConfigError("lr_decay_factor must exceed 1");
  if (plateau_delta < 0.0) throw ConfigError("plateau_delta must be non-negative");
  if (plateau_patience_epochs < 0) throw ConfigError("plateau_patience_epochs must be non-negative");
  if (!(stop_lr > 0.0)) throw ConfigError("stop_lr must be positive");
  if (crop_size <= 0) throw ConfigError("crop_size must be positive");
  if (resize_to < 0) throw ConfigError("resize_to must be non-negative");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  augmentations.validate();
}

TrainConfig TrainConfig::for_variant(DetectorVariant variant) {
  TrainConfig c;
  switch (variant) {
    case DetectorVariant::C_RF:
      c.real_roles = {DatasetRole::REAL};
      c.fake_roles = {DatasetRole::FAKE};
      c.resize_to = 400;
      break;
    case DetectorVariant::C_RX_FX:
      c.real_roles = {DatasetRole::REAL_PROC};
      c.fake_roles = {DatasetRole::FAKE_PROC};
      break;
    case DetectorVariant::C_RX_PX_FX:
      c.real_roles = {DatasetRole::REAL_PROC, DatasetRole::PROXY_REAL};
      c.fake_roles = {DatasetRole::FAKE_PROC};
      c.balanced_sampling = true;
      break;
  }
  return c;
}

bool ModelRegistry::exists(std::string_view model_id) const {
  return fs::exists(model_dir(model_id) / "config.json");
}

void ModelRegistry::save(ModelHandle& handle, nn::ResNetClassifier& model) const {
  const fs::path dir = model_dir(handle.model_id);
  fs::create_directories(dir);
  handle.weights_path = dir / "weights.bin";
  model.save(handle.weights_path);
  const json config{{"model_id", handle.model_id},
                    {"variant", to_string(handle.variant)},
                    {"train_config", train_config_to_json(handle.train_config)},
                    {"final_lr", handle.final_lr},
                    {"stopped_by_schedule", handle.stopped_by_schedule}};
  write_file_atomic(dir / "config.json", config.dump(2) + "\n");
  std::string log;
  for (const auto& e : handle.train_log) {
    log += json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"lr", e.lr}}.dump();
    log += '\n';
  }
  write_file_atomic(dir / "trainlog.jsonl", log);
}

ModelHandle ModelRegistry::load(std::string_view model_id) const {
  const fs::path dir = model_dir(model_id);
  if (!exists(model_id)) throw Error(fmt::format("model '{}' not found under {}", model_id, root_.string()));
  const json config = json::parse(read_file_text(dir / "config.json"));
  ModelHandle h;
  h.model_id = config.at("model_id").get<std::string>();
  h.variant = parse_variant(config.at("variant").get<std::string>());
  h.train_config = train_config_from_json(config.at("train_config"));
  h.weights_path = dir / "weights.bin";
  h.final_lr = config.value("final_lr", 0.0);
  h.stopped_by_schedule = config.value("stopped_by_schedule", false);
  if (fs::exists(dir / "trainlog.jsonl")) {
    std::istringstream in(read_file_text(dir / "trainlog.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const json e = json::parse(line);
      h.train_log.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_loss").get<double>(),
                             e.at("lr").get<double>()});
    }
  }
  return h;
}

std::vector<std::size_t> epoch_order(std::span<const TrainingSample> samples, bool balanced, Rng& rng) {
  std::vector<std::size_t> order;
  if (!balanced) {
    order.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) order[i] = i;
    rng.shuffle(order);
    return order;
  }
  std::vector<std::size_t> fakes, reals;
  for (std::size_t i = 0; i < samples.size(); ++i) (samples[i].target > 0.5f ? fakes : reals).push_back(i);
  if (fakes.empty() || reals.empty()) throw Error("balanced sampling needs both real and fake samples");
  order = fakes;
  std::vector<std::size_t> pool;
  while (order.size() < 2 * fakes.size()) {
    if (pool.empty()) {
      pool = reals;
      rng.shuffle(pool);
    }
    order.push_back(pool.back());
    pool.pop_back();
  }
  rng.shuffle(order);
  return order;
}

void preprocess_into(const cv::Mat& image, int crop_size, int resize_to, Rng* random_crop, float* out) {
  const cv::Mat img = prepare_geometry(image, crop_size, resize_to);
  int x0, y0;
  if (random_crop) {
    x0 = static_cast<int>(random_crop->uniform_int(0, img.cols - crop_size));
    y0 = static_cast<int>(random_crop->uniform_int(0, img.rows - crop_size));
  } else {
    x0 = (img.cols - crop_size) / 2;
    y0 = (img.rows - crop_size) / 2;
  }
  const std::size_t plane = static_cast<std::size_t>(crop_size) * crop_size;
  for (int y = 0; y < crop_size; ++y) {
    const auto* row = img.ptr<cv::Vec3b>(y0 + y) + x0;
    for (int x = 0; x < crop_size; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * crop_size + x;
      for (int c = 0; c < 3; ++c) {
        const float v = row[x][2 - c] / 255.0f;  // BGR -> RGB
        out[c * plane + idx] = (v - kMean[c]) / kStd[c];
      }
    }
  }
}

TrainResult train_model(nn::ResNetClassifier& model, std::span<const TrainingSample> train,
                        std::span<const TrainingSample> validation, const TrainConfig& config,
                        const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw Error("training split is empty");
  if (validation.empty()) throw Error("validation split is empty");
  if (!config.pretrained_weights.empty()) model.load_partial(config.pretrained_weights);

  const int crop = config.crop_size;
  const std::size_t sample_floats = 3 * static_cast<std::size_t>(crop) * crop;

  nn::Tensor val_x({static_cast<int>(validation.size()), 3, crop, crop});
  std::vector<float> val_targets;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    preprocess_into(decode_image(*validation[i].bytes), crop, config.resize_to, nullptr,
                    val_x.sample(static_cast<int>(i)));
    val_targets.push_back(validation[i].target);
  }

  nn::Adam optimizer(model.parameters(), config.initial_lr);
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  int decays = 0;
  double lr = config.initial_lr;

  for (int epoch = 1;; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(config.seed, static_cast<std::uint64_t>(epoch));
    Rng rng(epoch_seed);
    const auto order = epoch_order(train, config.balanced_sampling, rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t b = std::min<std::size_t>(config.batch_size, order.size() - start);
      nn::Tensor x({static_cast<int>(b), 3, crop, crop});
      std::vector<float> targets(b);
      for (std::size_t k = 0; k < b; ++k) {
        const auto& sample = train[order[start + k]];
        cv::Mat img = decode_image(*sample.bytes);
        if (config.resize_to > 0) img = prepare_geometry(img, 1, config.resize_to);
        img = augment(img, config.augmentations, mix_seed(epoch_seed, start + k));
        preprocess_into(img, crop, 0, &rng, x.data.data() + k * sample_floats);
        targets[k] = sample.target;
      }
      const nn::Tensor logits = model.forward(x, true);
      std::vector<float> grad;
      const double loss = nn::bce_with_logits(logits.data, targets, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged(fmt::format("non-finite training loss at epoch {} batch {} (lr {})", epoch,
                                           start / config.batch_size, lr));
      }
      nn::Tensor grad_t(logits.shape);
      grad_t.data = std::move(grad);
      model.zero_grad();
      model.backward(grad_t);
      optimizer.step();
      loss_sum += loss * static_cast<double>(b);
      seen += b;
    }
    const double val_loss = evaluate_loss(model, val_x, val_targets, config.batch_size);
    if (!std::isfinite(val_loss)) {
      throw TrainingDiverged(fmt::format("non-finite validation loss at epoch {} (lr {})", epoch, lr));
    }
    const EpochLog entry{epoch, loss_sum / static_cast<double>(seen), val_loss, lr};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (val_loss < best - config.plateau_delta) {
      best = val_loss;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (bad_epochs >= config.plateau_patience_epochs) {
      ++decays;
      lr = config.initial_lr / std::pow(config.lr_decay_factor, decays);
      optimizer.set_lr(lr);
      bad_epochs = 0;
    }
    // Relative slack so initial / factor^k landing an ulp under stop_lr does
    // not end training one decay early.
    if (lr < config.stop_lr * (1.0 - 1e-9)) {
      result.stopped_by_schedule = true;
      break;
    }
    if (config.max_epochs > 0 && epoch >= config.max_epochs) break;
  }
  result.final_lr = lr;
  return result;
}

ModelHandle train(const CorpusManifest& manifest, const CorpusStore& store, const TrainConfig& config,
                  DetectorVariant variant, std::string model_id, const ModelRegistry& registry,
                  const EpochCallback& on_epoch) {
  config.validate();
  std::vector<TrainingSample> train_set, val_set;
  auto collect = [&](Split split, std::vector<TrainingSample>& out) {
    auto add_roles = [&](const std::set<DatasetRole>& roles, float target) {
      for (auto role : roles) {
        const auto records = manifest.select(role, split);
        if (records.empty()) {
          throw Error(fmt::format("manifest has no {} records for role {}", to_string(split), to_string(role)));
        }
        for (const auto* r : records) {
          out.push_back({r->id, std::make_shared<const std::vector<std::uint8_t>>(store.load_bytes(*r)), target,
                         r->role == DatasetRole::PROXY_REAL});
        }
      }
    };
    add_roles(config.real_roles, 0.0f);
    add_roles(config.fake_roles, 1.0f);
  };
  collect(Split::TRAIN, train_set);
  collect(Split::VAL, val_set);

  nn::ResNetClassifier model(config.backbone, mix_seed(config.seed, 0xbacb0e));
  const TrainResult result = train_model(model, train_set, val_set, config, on_epoch);
  ModelHandle handle;
  handle.model_id = std::move(model_id);
  handle.variant = variant;
  handle.train_config = config;
  handle.train_log = result.log;
  handle.final_lr = result.final_lr;
  handle.stopped_by_schedule = result.stopped_by_schedule;
  registry.save(handle, model);
  return handle;
}

ResNetScorer::ResNetScorer(const ModelHandle& handle)
    : model_id_(handle.model_id),
      crop_size_(handle.train_config.crop_size),
      resize_to_(handle.train_config.resize_to),
      model_(handle.train_config.backbone, 0) {
  model_.load(handle.weights_path);
}

double ResNetScorer::score(const cv::Mat& image) const {
  const cv::Mat one[] = {image};
  return score_batch(one).front();
}

std::vector<double> ResNetScorer::score_batch(std::span<const cv::Mat> images) const {
  std::vector<double> out;
  if (images.empty()) return out;
  nn::Tensor x({static_cast<int>(images.size()), 3, crop_size_, crop_size_});
  for (std::size_t i = 0; i < images.size(); ++i) {
    preprocess_into(images[i], crop_size_, resize_to_, nullptr, x.sample(static_cast<int>(i)));
  }
  std::lock_guard lock(mutex_);
  const nn::Tensor logits = model_.forward(x, false);
  for (float z : logits.data) out.push_back(nn::sigmoid(z));
  return out;
}

ScoreRun score(std::span<const ImageRecord> images, const ImageScorer& scorer, const CorpusStore& store) {
  ScoreRun run;
  const Timestamp now = now_utc();
  for (const auto& record : images) {
    cv::Mat image;
    try {
      image = store.load_image(record);
    } catch (const Error&) {
      run.skipped.push_back(record.id);
      continue;
    }
    const double s = std::clamp(scorer.score(image), 0.0, 1.0);
    run.scores.push_back({record.id, scorer.model_id(), s, now});
  }
  return run;
}

std::string Condition::label() const { return fmt::format("{} vs {}", to_string(real_role), to_string(fake_role)); }

std::vector<Condition> default_conditions() {
  return {{DatasetRole::REAL_PROC, DatasetRole::FAKE_PROC},
          {DatasetRole::REAL_ZOOM, DatasetRole::FAKE_ZOOM},
          {DatasetRole::PROXY_REAL, DatasetRole::FAKE_PROC}};
}

AblationTable ablation_report(std::span<const std::string> model_ids, std::span<const Condition> conditions,
                              const CorpusManifest& manifest,
                              const std::map<std::string, std::vector<ScoreRecord>>& scores_by_model) {
  AblationTable table;
  table.models.assign(model_ids.begin(), model_ids.end());
  table.conditions.assign(conditions.begin(), conditions.end());
  for (const auto& cond : conditions) {
    const auto reals = manifest.select(cond.real_role, Split::TEST);
    const auto fakes = manifest.select(cond.fake_role, Split::TEST);
    std::vector<std::optional<double>> row;
    for (const auto& model : model_ids) {
      const auto it = scores_by_model.find(model);
      if (reals.empty() || fakes.empty() || it == scores_by_model.end()) {
        row.emplace_back();
        continue;
      }
      std::map<std::string, double> by_id;
      for (const auto& s : it->second) by_id[s.image_id] = s.score;
      std::vector<LabeledScore> labeled;
      bool has_real = false, has_fake = false;
      for (const auto* r : reals) {
        if (auto f = by_id.find(r->id); f != by_id.end()) {
          labeled.push_back({r->id, f->second, Label::REAL});
          has_real = true;
        }
      }
      for (const auto* r : fakes) {
        if (auto f = by_id.find(r->id); f != by_id.end()) {
          labeled.push_back({r->id, f->second, Label::FAKE});
          has_fake = true;
        }
      }
      row.push_back(has_real && has_fake ? std::optional<double>(auc(labeled)) : std::nullopt);
    }
    table.auc.push_back(std::move(row));
  }
  return table;
}

std::string AblationTable::to_text() const {
  std::string out = "| Condition |";
  for (const auto& m : models) out += fmt::format(" {} |", m);
  out += "\n|---|";
  for (std::size_t i = 0; i < models.size(); ++i) out += "---|";
  out += "\n";
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    out += fmt::format("| ({}) {} |", static_cast<char>('a' + c), conditions[c].label());
    for (const auto& cell : auc[c]) out += cell ? fmt::format(" {:.4f} |", *cell) : std::string(" - |");
    out += "\n";
  }
  return out;
}

std::string AblationTable::to_json() const {
  json j{{"models", models}};
  json conds = json::array();
  for (const auto& c : conditions) conds.push_back(c.label());
  j["conditions"] = conds;
  json cells = json::array();
  for (const auto& row : auc) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(cell ? json(*cell) : json(nullptr));
    cells.push_back(r);
  }
  j["auc"] = cells;
  return j.dump(2) + "\n";
}

}  // namespace ganwild
