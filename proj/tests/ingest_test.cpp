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

#include <opencv2/imgproc.hpp>

#include "ganwild/image.hpp"
#include "ganwild/ingest.hpp"
#include "testing.hpp"

namespace ganwild {
namespace {

std::vector<std::uint8_t> solid_jpeg(int v, int size = 32) {
  return encode_jpeg(cv::Mat(size, size, CV_8UC3, cv::Scalar(v, 255 - v, v / 2)), 90);
}

TEST(Roles, ParseAndProcessedMapping) {
  for (auto role : kAllRoles) EXPECT_EQ(parse_role(to_string(role)), role);
  EXPECT_EQ(parse_role("fake_proc"), DatasetRole::FAKE_PROC);
  EXPECT_THROW(parse_role("nope"), Error);
  EXPECT_EQ(processed_role(DatasetRole::REAL, false), DatasetRole::REAL_PROC);
  EXPECT_EQ(processed_role(DatasetRole::FAKE, true), DatasetRole::FAKE_ZOOM);
  EXPECT_EQ(role_is_fake(DatasetRole::DOCUMENTED_FAKE), true);
  EXPECT_EQ(role_is_fake(DatasetRole::PROXY_REAL), false);
  EXPECT_EQ(role_is_fake(DatasetRole::WILD), std::nullopt);
}

TEST(Record, JsonRoundTrip) {
  ImageRecord r;
  r.id = std::string(64, 'a');
  r.path = "images/aa/x.jpg";
  r.role = DatasetRole::FAKE_ZOOM;
  r.split = Split::TEST;
  r.width = 400;
  r.height = 300;
  r.source_note = "zoom=1.25 offset=(0.5,-0.25) q=85";
  r.source_id = std::string(64, 'b');
  EXPECT_EQ(record_from_json_line(record_to_json_line(r)), r);
}

TEST(CorpusStore, ContentAddressedAndIdempotent) {
  testing::TempDir dir;
  const CorpusStore store(dir.path(), "c");
  const auto bytes = solid_jpeg(10);
  const ImageRecord a = store.put(bytes, DatasetRole::REAL, "a.jpg");
  EXPECT_EQ(a.id, sha256_hex(bytes));
  EXPECT_EQ(store.load_bytes(a), bytes);
  const ImageRecord b = store.put(bytes, DatasetRole::REAL, "b.jpg");
  EXPECT_EQ(a.path, b.path);
  EXPECT_EQ(a.width, 32);
}

TEST(Import, SkipsDuplicatesAndNonImages) {
  testing::TempDir dir;
  const fs::path src = dir / "src";
  fs::create_directories(src);
  write_file_atomic(src / "a.jpg", solid_jpeg(10));
  write_file_atomic(src / "b.jpg", solid_jpeg(10));
  write_file_atomic(src / "c.jpg", solid_jpeg(200));
  write_file_atomic(src / "notes.txt", std::string_view("hello"));
  const CorpusStore store(dir.path(), "c");
  const auto r = import_corpus(src, DatasetRole::FAKE, store.open_or_create(0, {}), store);
  EXPECT_EQ(r.added, 2u);
  ASSERT_EQ(r.warnings.size(), 2u);
  EXPECT_NE(r.warnings[0].message.find("duplicate"), std::string::npos);
  // Re-import adds nothing.
  const auto again = import_corpus(src, DatasetRole::FAKE, r.manifest, store);
  EXPECT_EQ(again.added, 0u);
}

TEST(Import, PngReencodedForLabeledRolesOnly) {
  testing::TempDir dir;
  const fs::path src = dir / "src";
  fs::create_directories(src);
  write_file_atomic(src / "a.png", encode_png(cv::Mat(16, 16, CV_8UC3, cv::Scalar(1, 2, 3))));
  const CorpusStore store(dir.path(), "c");
  const auto fake = import_corpus(src, DatasetRole::FAKE, store.open_or_create(0, {}), store);
  EXPECT_EQ(fake.manifest.records.at(0).format, ImageFormat::JPEG);
  const CorpusStore store2(dir.path(), "d");
  const auto wild = import_corpus(src, DatasetRole::WILD, store2.open_or_create(0, {}), store2);
  EXPECT_EQ(wild.manifest.records.at(0).format, ImageFormat::PNG);
}

TEST(Manifest, SaveLoadRoundTrip) {
  testing::TempDir dir;
  testing::FixtureOptions opt;
  opt.synth.real = 6;
  opt.synth.fake = 6;
  opt.synth.size = 48;
  const auto f = testing::make_fixture(dir.path(), "c", opt);
  const CorpusManifest loaded = CorpusStore(dir.path(), "c").load_manifest();
  EXPECT_EQ(loaded.records, f.manifest.records);
  EXPECT_EQ(loaded.profile, f.manifest.profile);
  EXPECT_EQ(loaded.corpus_id, "c");
}

class SplitTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::FixtureOptions opt;
    opt.synth.real = 30;
    opt.synth.fake = 20;
    opt.synth.size = 48;
    opt.splits = {{DatasetRole::REAL, {10, 5, 10}}, {DatasetRole::FAKE, {8, 4, 8}}};
    opt.processed = true;
    opt.zoomed = true;
    fixture_ = testing::make_fixture(dir_.path(), "c", opt);
  }
  testing::TempDir dir_;
  testing::Fixture fixture_;
};

TEST_F(SplitTest, CountsAndDisjointness) {
  const auto& m = fixture_.manifest;
  EXPECT_EQ(m.select(DatasetRole::REAL, Split::TRAIN).size(), 10u);
  EXPECT_EQ(m.select(DatasetRole::REAL, Split::VAL).size(), 5u);
  EXPECT_EQ(m.select(DatasetRole::REAL, Split::TEST).size(), 10u);
  EXPECT_EQ(m.select(DatasetRole::REAL, Split::NONE).size(), 5u);
  EXPECT_EQ(m.select(DatasetRole::FAKE, Split::TEST).size(), 8u);
  std::set<std::string> ids;
  for (const auto& r : m.records) EXPECT_TRUE(ids.insert(r.id).second) << "duplicate id " << r.id;
}

TEST_F(SplitTest, ProcessedInheritSplitAndZoomOnlyTest) {
  const auto& m = fixture_.manifest;
  for (const auto& r : m.records) {
    if (r.role == DatasetRole::REAL_PROC || r.role == DatasetRole::FAKE_PROC) {
      const ImageRecord* src = m.find(r.source_id);
      ASSERT_NE(src, nullptr);
      EXPECT_EQ(r.split, src->split);
      EXPECT_EQ(r.width, 64);
      EXPECT_EQ(r.height, 64);
    }
    if (is_zoom_role(r.role)) {
      EXPECT_EQ(r.split, Split::TEST);
      EXPECT_EQ(m.find(r.source_id)->split, Split::TEST);
      const auto z = parse_zoom_note(r.source_note);
      ASSERT_TRUE(z);
      EXPECT_GE(z->factor, 1.0);
      EXPECT_LE(z->factor, 1.6);
    }
  }
  EXPECT_EQ(m.select(DatasetRole::REAL_PROC).size(), 30u);
  EXPECT_EQ(m.select(DatasetRole::REAL_ZOOM).size(), 10u);
  EXPECT_EQ(m.select(DatasetRole::FAKE_ZOOM).size(), 8u);
}

TEST_F(SplitTest, ReassignKeepsDerivedConsistent) {
  const SplitSpec spec{{DatasetRole::REAL, {5, 5, 5}}};
  const CorpusManifest m = assign_splits(fixture_.manifest, spec, 99);
  for (const auto& r : m.records) {
    if (r.role == DatasetRole::REAL_PROC) EXPECT_EQ(r.split, m.find(r.source_id)->split);
  }
  EXPECT_THROW(assign_splits(fixture_.manifest, {{DatasetRole::FAKE, {30, 0, 0}}}, 0), ConfigError);
}

TEST_F(SplitTest, PrepareIsIdempotent) {
  const CorpusStore store(dir_.path(), "c");
  const CorpusManifest again = prepare_processed(fixture_.manifest, {true, true}, store);
  EXPECT_EQ(again.records.size(), fixture_.manifest.records.size());
}

TEST(Processing, DeterministicInSeed) {
  testing::TempDir dir;
  const CorpusStore store(dir.path(), "c");
  const cv::Mat img = render_synthetic(SynthKind::PHOTO, 96, 5).image;
  const ImageRecord src = store.put(encode_jpeg(img, 95), DatasetRole::REAL, "x");
  ProcessingProfile p;
  p.target_size = 48;
  const ImageRecord a = simulate_platform_processing(src, p, true, 17, store);
  const ImageRecord b = simulate_platform_processing(src, p, true, 17, store);
  EXPECT_EQ(a.id, b.id);
  const ImageRecord c = simulate_platform_processing(src, p, false, 17, store);
  EXPECT_EQ(c.role, DatasetRole::REAL_PROC);
  EXPECT_EQ(c.source_id, src.id);
}

TEST(Zoom, CropRect) {
  EXPECT_EQ(zoom_crop_rect(100, 100, {1.0, 0.0, 0.0}), cv::Rect(0, 0, 100, 100));
  EXPECT_EQ(zoom_crop_rect(100, 100, {2.0, 0.0, 0.0}), cv::Rect(25, 25, 50, 50));
  EXPECT_EQ(zoom_crop_rect(100, 100, {2.0, -1.0, 1.0}), cv::Rect(0, 50, 50, 50));
  const ProcessingProfile p;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const ZoomParams z = draw_zoom(p, s);
    const cv::Rect r = zoom_crop_rect(400, 300, z);
    EXPECT_GE(r.x, 0);
    EXPECT_GE(r.y, 0);
    EXPECT_LE(r.x + r.width, 400);
    EXPECT_LE(r.y + r.height, 300);
  }
}

TEST(Profile, Validation) {
  ProcessingProfile p;
  EXPECT_NO_THROW(p.validate());
  p.zoom_min = 0.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.jpeg_quality = 101;
  EXPECT_THROW(p.validate(), ConfigError);
}

}  // namespace
}  // namespace ganwild
