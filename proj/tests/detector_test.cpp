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

#include <map>

#include "ganwild/calibrate.hpp"
#include "ganwild/detector.hpp"
#include "ganwild/image.hpp"
#include "testing.hpp"

namespace ganwild {
namespace {

TrainConfig tiny_config() {
  TrainConfig t = TrainConfig::for_variant(DetectorVariant::C_RX_FX);
  t.batch_size = 8;
  t.crop_size = 16;
  t.resize_to = 32;
  t.initial_lr = 1e-3;
  t.plateau_patience_epochs = 1;
  t.backbone.stem_channels = 4;
  t.backbone.stages = {{4, 1, 2}};
  t.augmentations.probability = 0.0;
  return t;
}

std::vector<TrainingSample> samples_from(int n_real, int n_fake, int size, std::uint64_t seed) {
  std::vector<TrainingSample> out;
  for (int i = 0; i < n_real + n_fake; ++i) {
    const bool fake = i >= n_real;
    const auto img = render_synthetic(fake ? SynthKind::GENERATED : SynthKind::PHOTO, size, mix_seed(seed, i)).image;
    auto bytes = std::make_shared<const std::vector<std::uint8_t>>(encode_jpeg(img, 95));
    out.push_back({sha256_hex(*bytes), bytes, fake ? 1.0f : 0.0f, false});
  }
  return out;
}

TEST(TrainConfig, VariantDefaults) {
  const auto rf = TrainConfig::for_variant(DetectorVariant::C_RF);
  EXPECT_EQ(rf.real_roles, std::set<DatasetRole>{DatasetRole::REAL});
  EXPECT_EQ(rf.fake_roles, std::set<DatasetRole>{DatasetRole::FAKE});
  EXPECT_EQ(rf.resize_to, 400);
  const auto px = TrainConfig::for_variant(DetectorVariant::C_RX_PX_FX);
  EXPECT_TRUE(px.real_roles.contains(DatasetRole::PROXY_REAL));
  EXPECT_TRUE(px.balanced_sampling);
  EXPECT_EQ(px.initial_lr, 1e-4);
  EXPECT_EQ(px.lr_decay_factor, 10.0);
  EXPECT_EQ(px.plateau_delta, 0.001);
  EXPECT_EQ(px.plateau_patience_epochs, 5);
  EXPECT_EQ(px.stop_lr, 1e-6);
  EXPECT_EQ(px.batch_size, 32);
  EXPECT_EQ(px.crop_size, 224);
  EXPECT_EQ(px.augmentations.probability, 0.1);
}

TEST(TrainConfig, Validation) {
  TrainConfig t = tiny_config();
  EXPECT_NO_THROW(t.validate());
  t.fake_roles.insert(DatasetRole::REAL_PROC);
  EXPECT_THROW(t.validate(), ConfigError);  // overlapping roles
  t = tiny_config();
  t.real_roles.insert(DatasetRole::PROXY_REAL);
  EXPECT_THROW(t.validate(), ConfigError);  // proxy reals need balancing
  t.balanced_sampling = true;
  EXPECT_NO_THROW(t.validate());
  t = tiny_config();
  t.lr_decay_factor = 1.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = tiny_config();
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig t = TrainConfig::for_variant(DetectorVariant::C_RX_PX_FX);
  t.seed = 77;
  t.max_epochs = 3;
  t.pretrained_weights = "/x/w.bin";
  const TrainConfig back = TrainConfig::from_json(t.to_json());
  EXPECT_EQ(back.real_roles, t.real_roles);
  EXPECT_EQ(back.fake_roles, t.fake_roles);
  EXPECT_EQ(back.backbone, t.backbone);
  EXPECT_EQ(back.augmentations, t.augmentations);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.max_epochs, 3);
  EXPECT_EQ(back.pretrained_weights, "/x/w.bin");
  EXPECT_THROW(TrainConfig::from_json("{}"), ConfigError);
}

TEST(EpochOrder, BalancedUsesEveryFakeOnceAndEqualReals) {
  std::vector<TrainingSample> s;
  for (int i = 0; i < 7; ++i) s.push_back({"r" + std::to_string(i), nullptr, 0.0f, i >= 4});
  for (int i = 0; i < 12; ++i) s.push_back({"f" + std::to_string(i), nullptr, 1.0f, false});
  Rng rng(1);
  const auto order = epoch_order(s, true, rng);
  std::map<std::size_t, int> uses;
  int fakes = 0, reals = 0;
  for (auto i : order) {
    ++uses[i];
    (s[i].target > 0.5f ? fakes : reals) += 1;
  }
  EXPECT_EQ(fakes, 12);
  EXPECT_EQ(reals, 12);
  // 12 reals from a pool of 7: every real once before any repeats.
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_GE(uses[i], 1);
    EXPECT_LE(uses[i], 2);
  }
  for (std::size_t i = 7; i < s.size(); ++i) EXPECT_EQ(uses[i], 1);
}

TEST(EpochOrder, UnbalancedIsPermutation) {
  std::vector<TrainingSample> s(10);
  Rng rng(2);
  auto order = epoch_order(s, false, rng);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(order[i], i);
}

TEST(Preprocess, CenterCropNormalization) {
  // Uniform image: every output value is (v / 255 - mean_c) / std_c.
  const cv::Mat img(20, 30, CV_8UC3, cv::Scalar(0, 128, 255));  // B, G, R
  std::vector<float> out(3 * 16 * 16);
  preprocess_into(img, 16, 0, nullptr, out.data());
  const double mean[] = {0.485, 0.456, 0.406}, stdev[] = {0.229, 0.224, 0.225};
  const double rgb[] = {1.0, 128.0 / 255.0, 0.0};
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(out[c * 256 + 17], (rgb[c] - mean[c]) / stdev[c], 1e-5);
}

TEST(Schedule, OnlyFactorTenStepsAndStopsBelowStopLr) {
  auto train = samples_from(8, 8, 32, 1);
  auto val = samples_from(4, 4, 32, 2);
  TrainConfig t = tiny_config();
  t.plateau_delta = 1e9;  // no epoch counts as an improvement after the first
  nn::ResNetClassifier model(t.backbone, 3);
  std::vector<EpochLog> seen;
  const TrainResult r = train_model(model, train, val, t, [&](const EpochLog& e) { seen.push_back(e); });
  ASSERT_TRUE(r.stopped_by_schedule);
  ASSERT_EQ(seen.size(), r.log.size());
  EXPECT_LT(r.final_lr, 1e-6);
  double prev = t.initial_lr;
  for (const auto& e : r.log) {
    const double ratio = prev / e.lr;
    EXPECT_TRUE(std::abs(ratio - 1.0) < 1e-12 || std::abs(ratio - 10.0) < 1e-9) << "ratio " << ratio;
    EXPECT_GE(e.lr, 1e-6 * (1 - 1e-9));
    prev = e.lr;
  }
  EXPECT_NEAR(prev / r.final_lr, 10.0, 1e-9);
  // Epoch 1 sets the best loss; each later epoch decays once:
  // 1e-3, 1e-3, 1e-4, 1e-5, 1e-6, then 1e-7 stops.
  EXPECT_EQ(r.log.size(), 5u);
}

TEST(Schedule, MaxEpochsCap) {
  auto train = samples_from(4, 4, 32, 3);
  auto val = samples_from(2, 2, 32, 4);
  TrainConfig t = tiny_config();
  t.plateau_patience_epochs = 100;
  t.max_epochs = 2;
  nn::ResNetClassifier model(t.backbone, 3);
  const TrainResult r = train_model(model, train, val, t);
  EXPECT_EQ(r.log.size(), 2u);
  EXPECT_FALSE(r.stopped_by_schedule);
  EXPECT_EQ(r.final_lr, t.initial_lr);
}

TEST(Schedule, DeterministicInSeed) {
  auto train = samples_from(6, 6, 32, 5);
  auto val = samples_from(3, 3, 32, 6);
  TrainConfig t = tiny_config();
  t.max_epochs = 2;
  t.augmentations.probability = 0.5;
  nn::ResNetClassifier a(t.backbone, 9), b(t.backbone, 9);
  const auto ra = train_model(a, train, val, t);
  const auto rb = train_model(b, train, val, t);
  for (std::size_t i = 0; i < ra.log.size(); ++i) {
    EXPECT_EQ(ra.log[i].train_loss, rb.log[i].train_loss);
    EXPECT_EQ(ra.log[i].val_loss, rb.log[i].val_loss);
  }
}

class CorpusTraining : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::FixtureOptions opt;
    opt.synth.real = 16;
    opt.synth.fake = 16;
    opt.synth.size = 32;
    opt.target_size = 32;
    opt.splits = {{DatasetRole::REAL, {8, 4, 4}}, {DatasetRole::FAKE, {8, 4, 4}}};
    opt.processed = true;
    opt.zoomed = true;
    fixture_ = testing::make_fixture(dir_.path(), "c", opt);
  }
  testing::TempDir dir_;
  testing::Fixture fixture_;
};

TEST_F(CorpusTraining, TrainSaveLoadScore) {
  const CorpusStore store(dir_.path(), "c");
  const ModelRegistry registry(dir_.path());
  TrainConfig t = tiny_config();
  t.max_epochs = 2;
  const ModelHandle h = train(fixture_.manifest, store, t, DetectorVariant::C_RX_FX, "m1", registry);
  EXPECT_TRUE(registry.exists("m1"));
  for (const char* f : {"config.json", "weights.bin", "trainlog.jsonl"}) EXPECT_TRUE(fs::exists(registry.model_dir("m1") / f));
  const ModelHandle loaded = registry.load("m1");
  EXPECT_EQ(loaded.train_log.size(), h.train_log.size());
  EXPECT_EQ(loaded.train_config.backbone, t.backbone);
  EXPECT_EQ(loaded.final_lr, h.final_lr);
  EXPECT_THROW(registry.load("nope"), Error);

  const ResNetScorer scorer(loaded);
  std::vector<ImageRecord> test;
  for (const auto* r : fixture_.manifest.select(DatasetRole::FAKE_PROC, Split::TEST)) test.push_back(*r);
  ImageRecord broken = test.front();
  broken.id = "broken";
  broken.path = "images/zz/missing.jpg";
  write_file_atomic(store.root() / broken.path, std::string_view("not an image"));
  test.push_back(broken);
  const ScoreRun run = score(test, scorer, store);
  EXPECT_EQ(run.scores.size(), test.size() - 1);
  EXPECT_EQ(run.skipped, std::vector<std::string>{"broken"});
  for (const auto& s : run.scores) {
    EXPECT_GE(s.score, 0.0);
    EXPECT_LE(s.score, 1.0);
    EXPECT_EQ(s.model_id, "m1");
  }
  const ScoreRun again = score(std::span(test).first(test.size() - 1), scorer, store);
  for (std::size_t i = 0; i < again.scores.size(); ++i) EXPECT_EQ(again.scores[i].score, run.scores[i].score);
}

TEST_F(CorpusTraining, MissingSplitIsAnError) {
  const CorpusStore store(dir_.path(), "c");
  TrainConfig t = tiny_config();
  t.real_roles = {DatasetRole::PROXY_REAL};
  t.balanced_sampling = true;
  EXPECT_THROW(train(fixture_.manifest, store, t, DetectorVariant::C_RX_PX_FX, "m", ModelRegistry(dir_.path())), Error);
}

TEST_F(CorpusTraining, AblationTable) {
  std::map<std::string, std::vector<ScoreRecord>> scores;
  // Model "good" separates processed test images perfectly; "flip" inverts them.
  for (const auto& r : fixture_.manifest.records) {
    if (r.split != Split::TEST || !role_is_fake(r.role)) continue;
    const double s = *role_is_fake(r.role) ? 0.9 : 0.1;
    scores["good"].push_back({r.id, "good", s, {}});
    scores["flip"].push_back({r.id, "flip", 1.0 - s, {}});
  }
  const std::vector<std::string> models{"good", "flip", "absent"};
  const auto conditions = default_conditions();
  const AblationTable t = ablation_report(models, conditions, fixture_.manifest, scores);
  ASSERT_EQ(t.auc.size(), 3u);
  EXPECT_EQ(t.auc[0][0], 1.0);
  EXPECT_EQ(t.auc[0][1], 0.0);
  EXPECT_EQ(t.auc[1][0], 1.0);
  EXPECT_FALSE(t.auc[0][2].has_value());
  EXPECT_FALSE(t.auc[2][0].has_value());  // no PROXY_REAL images
  const std::string text = t.to_text();
  EXPECT_NE(text.find("(a) REAL_PROC vs FAKE_PROC"), std::string::npos);
  EXPECT_NE(text.find("1.0000"), std::string::npos);
  EXPECT_NE(text.find(" - "), std::string::npos);
}

}  // namespace
}  // namespace ganwild
