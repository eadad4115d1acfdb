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

#ifndef GANWILD_INGEST_HPP_
#define GANWILD_INGEST_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "ganwild/common.hpp"
#include "ganwild/image.hpp"

namespace ganwild {

// Dataset roles. REAL/FAKE are the original labeled sets, *_PROC their
// platform-processed copies, *_ZOOM the zoom-then-process copies used only
// for evaluation.
enum class DatasetRole {
  REAL,
  FAKE,
  REAL_PROC,
  FAKE_PROC,
  REAL_ZOOM,
  FAKE_ZOOM,
  PROXY_REAL,
  WILD,
  DOCUMENTED_FAKE,
};

inline constexpr DatasetRole kAllRoles[] = {
    DatasetRole::REAL,      DatasetRole::FAKE,       DatasetRole::REAL_PROC,
    DatasetRole::FAKE_PROC, DatasetRole::REAL_ZOOM,  DatasetRole::FAKE_ZOOM,
    DatasetRole::PROXY_REAL, DatasetRole::WILD,      DatasetRole::DOCUMENTED_FAKE,
};

std::string_view to_string(DatasetRole role);
// Accepts the enum spelling in any case, e.g. "fake_proc".
DatasetRole parse_role(std::string_view text);
bool is_processed_role(DatasetRole role);
bool is_zoom_role(DatasetRole role);
// Ground-truth class of a role: true for fake roles, false for real ones,
// nullopt for WILD.
std::optional<bool> role_is_fake(DatasetRole role);
// REAL -> REAL_PROC / REAL_ZOOM, FAKE -> FAKE_PROC / FAKE_ZOOM.
DatasetRole processed_role(DatasetRole source, bool zoomed);

enum class Split { TRAIN, VAL, TEST, NONE };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ImageRecord {
  std::string id;  // sha256 of the stored bytes
  std::string path;  // relative to the corpus root
  DatasetRole role = DatasetRole::WILD;
  Split split = Split::NONE;
  int width = 0;
  int height = 0;
  ImageFormat format = ImageFormat::JPEG;
  std::string source_note;
  // Id of the record this one was derived from; empty for imported images.
  std::string source_id;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct ProcessingProfile {
  int target_size = 400;
  std::string interpolation = "bilinear";
  int jpeg_quality = 85;
  double zoom_min = 1.0;
  double zoom_max = 1.6;
  // Maximum crop offset per axis as a fraction of the cropped-out margin on
  // each side of center: 0 keeps the crop centered, 1 lets it touch an edge.
  double offset_max = 1.0;

  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const ProcessingProfile&, const ProcessingProfile&) = default;
};

struct ZoomParams {
  double factor = 1.0;
  double offset_x = 0.0;  // in [-1, 1]
  double offset_y = 0.0;
};

ZoomParams draw_zoom(const ProcessingProfile& profile, std::uint64_t seed);
// Pixel crop selected by `zoom` on a width x height image.
cv::Rect zoom_crop_rect(int width, int height, const ZoomParams& zoom);
// Recovers zoom parameters from the source_note of a zoom record.
std::optional<ZoomParams> parse_zoom_note(std::string_view note);

// Pure image transform behind platform simulation: optional zoom crop, then
// bilinear resize to target_size, then JPEG at jpeg_quality.
std::vector<std::uint8_t> process_image_bytes(std::span<const std::uint8_t> bytes,
                                              const ProcessingProfile& profile,
                                              const std::optional<ZoomParams>& zoom);

struct CorpusManifest {
  std::string corpus_id;
  Timestamp created_at{};
  std::vector<ImageRecord> records;
  ProcessingProfile profile;
  std::uint64_t seed = 0;

  const ImageRecord* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  std::vector<const ImageRecord*> select(DatasetRole role, std::optional<Split> split = std::nullopt) const;
};

struct SplitCounts {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::size_t total() const { return n_train + n_val + n_test; }
};
using SplitSpec = std::map<DatasetRole, SplitCounts>;

struct ImportWarning {
  std::string path;
  std::string message;
};

struct ImportResult {
  CorpusManifest manifest;
  std::size_t added = 0;
  std::vector<ImportWarning> warnings;
};

// corpus/<corpus_id>/ under a workspace root:
//   images/<first2-of-id>/<id>.jpg
//   manifest.jsonl   one ImageRecord per line
//   corpus.json      corpus-level fields (id, created_at, profile, seed)
class CorpusStore {
 public:
  CorpusStore(fs::path workspace, std::string corpus_id);

  const std::string& corpus_id() const { return corpus_id_; }
  fs::path root() const { return root_; }
  static std::string relative_image_path(std::string_view id, ImageFormat format);
  fs::path image_path(const ImageRecord& record) const { return root_ / record.path; }

  std::vector<std::uint8_t> load_bytes(const ImageRecord& record) const;
  cv::Mat load_image(const ImageRecord& record) const;

  // Content-addresses the bytes, writes them if not yet on disk, and returns
  // a record (split NONE) describing them.
  ImageRecord put(std::span<const std::uint8_t> bytes, DatasetRole role, std::string source_note) const;

  bool has_manifest() const;
  void save_manifest(const CorpusManifest& manifest) const;
  CorpusManifest load_manifest() const;
  // Loads the manifest if present, otherwise returns a fresh one.
  CorpusManifest open_or_create(std::uint64_t seed, const ProcessingProfile& profile) const;

 private:
  std::string corpus_id_;
  fs::path root_;
};

std::string record_to_json_line(const ImageRecord& record);
ImageRecord record_from_json_line(std::string_view line);

// Imports every file under `directory` (non-recursive, sorted by name).
ImportResult import_corpus(const fs::path& directory, DatasetRole role, const CorpusManifest& manifest,
                           const CorpusStore& store);

// Deterministic in (record bytes, profile, zoomed, rng_seed).
ImageRecord simulate_platform_processing(const ImageRecord& record, const ProcessingProfile& profile, bool zoomed,
                                         std::uint64_t rng_seed, const CorpusStore& store);
// Same with explicit zoom parameters; `zoom` is ignored unless zoomed.
ImageRecord simulate_platform_processing(const ImageRecord& record, const ProcessingProfile& profile, bool zoomed,
                                         const ZoomParams& zoom, const CorpusStore& store);

// Uniform random disjoint split assignment per role. Processed records
// inherit their source's split; zoom records are always TEST.
CorpusManifest assign_splits(const CorpusManifest& manifest, const SplitSpec& spec, std::uint64_t seed);

struct PrepareOptions {
  bool processed = true;
  // Zoom copies are generated only for sources in the TEST split.
  bool zoomed = false;
};

// Adds *_PROC (and optionally *_ZOOM) copies of every REAL/FAKE record not
// yet processed. Per-record seeds derive from manifest.seed and the id.
CorpusManifest prepare_processed(const CorpusManifest& manifest, const PrepareOptions& options,
                                 const CorpusStore& store);

}  // namespace ganwild

#endif  // GANWILD_INGEST_HPP_
