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

#include "ganwild/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

#include <opencv2/imgproc.hpp>

#include <fmt/format.h>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

constexpr std::string_view kRoleNames[] = {"REAL",      "FAKE",       "REAL_PROC", "FAKE_PROC",      "REAL_ZOOM",
                                           "FAKE_ZOOM", "PROXY_REAL", "WILD",      "DOCUMENTED_FAKE"};

std::uint64_t id_stream(std::string_view id) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < std::min<std::size_t>(16, id.size()); ++i) {
    const char c = id[i];
    const std::uint64_t d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : 0;
    v = (v << 4) | d;
  }
  return v;
}

json profile_to_json(const ProcessingProfile& p) {
  return json{{"target_size", p.target_size}, {"interpolation", p.interpolation}, {"jpeg_quality", p.jpeg_quality},
              {"zoom_range", {p.zoom_min, p.zoom_max}}, {"offset_range", p.offset_max}};
}

ProcessingProfile profile_from_json(const json& j) {
  ProcessingProfile p;
  p.target_size = j.value("target_size", p.target_size);
  p.interpolation = j.value("interpolation", p.interpolation);
  p.jpeg_quality = j.value("jpeg_quality", p.jpeg_quality);
  if (j.contains("zoom_range")) {
    p.zoom_min = j.at("zoom_range").at(0).get<double>();
    p.zoom_max = j.at("zoom_range").at(1).get<double>();
  }
  p.offset_max = j.value("offset_range", p.offset_max);
  return p;
}

}  // namespace

std::string_view to_string(DatasetRole role) { return kRoleNames[static_cast<int>(role)]; }

DatasetRole parse_role(std::string_view text) {
  std::string upper(text);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < std::size(kRoleNames); ++i) {
    if (upper == kRoleNames[i]) return static_cast<DatasetRole>(i);
  }
  throw Error(fmt::format("unknown dataset role '{}'", text));
}

bool is_processed_role(DatasetRole role) { return role == DatasetRole::REAL_PROC || role == DatasetRole::FAKE_PROC; }

bool is_zoom_role(DatasetRole role) { return role == DatasetRole::REAL_ZOOM || role == DatasetRole::FAKE_ZOOM; }

std::optional<bool> role_is_fake(DatasetRole role) {
  switch (role) {
    case DatasetRole::REAL:
    case DatasetRole::REAL_PROC:
    case DatasetRole::REAL_ZOOM:
    case DatasetRole::PROXY_REAL:
      return false;
    case DatasetRole::FAKE:
    case DatasetRole::FAKE_PROC:
    case DatasetRole::FAKE_ZOOM:
    case DatasetRole::DOCUMENTED_FAKE:
      return true;
    case DatasetRole::WILD:
      return std::nullopt;
  }
  return std::nullopt;
}

DatasetRole processed_role(DatasetRole source, bool zoomed) {
  if (source == DatasetRole::REAL) return zoomed ? DatasetRole::REAL_ZOOM : DatasetRole::REAL_PROC;
  if (source == DatasetRole::FAKE) return zoomed ? DatasetRole::FAKE_ZOOM : DatasetRole::FAKE_PROC;
  throw Error(fmt::format("role {} has no processed counterpart", to_string(source)));
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::TRAIN: return "TRAIN";
    case Split::VAL: return "VAL";
    case Split::TEST: return "TEST";
    case Split::NONE: return "NONE";
  }
  return "NONE";
}

Split parse_split(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "train") return Split::TRAIN;
  if (lower == "val" || lower == "validation") return Split::VAL;
  if (lower == "test") return Split::TEST;
  if (lower == "none" || lower.empty()) return Split::NONE;
  throw Error(fmt::format("unknown split '{}'", text));
}

void ProcessingProfile::validate() const {
  if (target_size <= 0) throw ConfigError("processing profile: target_size must be positive");
  if (interpolation != "bilinear") throw ConfigError("processing profile: only bilinear interpolation is supported");
  if (jpeg_quality < 1 || jpeg_quality > 100) throw ConfigError("processing profile: jpeg_quality outside [1, 100]");
  if (zoom_min != 1.0) throw ConfigError("processing profile: zoom range must start at exactly 1.0");
  if (zoom_max < zoom_min) throw ConfigError("processing profile: zoom factor below 1.0");
  if (offset_max < 0.0 || offset_max > 1.0) throw ConfigError("processing profile: offset_range outside [0, 1]");
}

ZoomParams draw_zoom(const ProcessingProfile& profile, std::uint64_t seed) {
  profile.validate();
  Rng rng(seed);
  ZoomParams z;
  z.factor = rng.uniform(profile.zoom_min, profile.zoom_max);
  z.offset_x = rng.uniform(-profile.offset_max, profile.offset_max);
  z.offset_y = rng.uniform(-profile.offset_max, profile.offset_max);
  return z;
}

cv::Rect zoom_crop_rect(int width, int height, const ZoomParams& zoom) {
  const int cw = std::clamp(static_cast<int>(std::lround(width / zoom.factor)), 1, width);
  const int ch = std::clamp(static_cast<int>(std::lround(height / zoom.factor)), 1, height);
  const double half_x = (width - cw) / 2.0;
  const double half_y = (height - ch) / 2.0;
  const int x0 = std::clamp(static_cast<int>(std::lround(half_x * (1.0 + zoom.offset_x))), 0, width - cw);
  const int y0 = std::clamp(static_cast<int>(std::lround(half_y * (1.0 + zoom.offset_y))), 0, height - ch);
  return {x0, y0, cw, ch};
}

std::optional<ZoomParams> parse_zoom_note(std::string_view note) {
  ZoomParams z;
  const std::string text(note);
  if (std::sscanf(text.c_str(), "zoom=%lf offset=(%lf,%lf)", &z.factor, &z.offset_x, &z.offset_y) != 3) {
    return std::nullopt;
  }
  return z;
}

std::vector<std::uint8_t> process_image_bytes(std::span<const std::uint8_t> bytes, const ProcessingProfile& profile,
                                              const std::optional<ZoomParams>& zoom) {
  profile.validate();
  cv::Mat image = decode_image(bytes);
  if (zoom) {
    if (!(zoom->factor >= 1.0)) throw ConfigError(fmt::format("zoom factor {} below 1.0", zoom->factor));
    if (std::abs(zoom->offset_x) > 1.0 || std::abs(zoom->offset_y) > 1.0) {
      throw ConfigError("zoom offsets must lie in [-1, 1]");
    }
    image = image(zoom_crop_rect(image.cols, image.rows, *zoom)).clone();
  }
  const cv::Mat resized = resize_bilinear(image, profile.target_size, profile.target_size);
  return encode_jpeg(resized, profile.jpeg_quality);
}

const ImageRecord* CorpusManifest::find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<const ImageRecord*> CorpusManifest::select(DatasetRole role, std::optional<Split> split) const {
  std::vector<const ImageRecord*> out;
  for (const auto& r : records) {
    if (r.role == role && (!split || r.split == *split)) out.push_back(&r);
  }
  return out;
}

CorpusStore::CorpusStore(fs::path workspace, std::string corpus_id)
    : corpus_id_(std::move(corpus_id)), root_(std::move(workspace) / "corpus" / corpus_id_) {
  if (corpus_id_.empty() || corpus_id_.find('/') != std::string::npos) {
    throw ConfigError(fmt::format("invalid corpus id '{}'", corpus_id_));
  }
}

std::string CorpusStore::relative_image_path(std::string_view id, ImageFormat format) {
  return fmt::format("images/{}/{}{}", id.substr(0, 2), id, file_extension(format));
}

std::vector<std::uint8_t> CorpusStore::load_bytes(const ImageRecord& record) const {
  return read_file_bytes(image_path(record));
}

cv::Mat CorpusStore::load_image(const ImageRecord& record) const { return decode_image(load_bytes(record)); }

ImageRecord CorpusStore::put(std::span<const std::uint8_t> bytes, DatasetRole role, std::string source_note) const {
  const auto format = sniff_image_format(bytes);
  if (!format) throw DecodeError("not a JPEG or PNG stream");
  const cv::Mat decoded = decode_image(bytes);
  ImageRecord record;
  record.id = sha256_hex(bytes);
  record.path = relative_image_path(record.id, *format);
  record.role = role;
  record.split = Split::NONE;
  record.width = decoded.cols;
  record.height = decoded.rows;
  record.format = *format;
  record.source_note = std::move(source_note);
  const fs::path target = root_ / record.path;
  if (!fs::exists(target)) write_file_atomic(target, bytes);
  return record;
}

bool CorpusStore::has_manifest() const { return fs::exists(root_ / "corpus.json"); }

void CorpusStore::save_manifest(const CorpusManifest& manifest) const {
  if (manifest.corpus_id != corpus_id_) {
    throw Error(fmt::format("manifest for '{}' saved into store '{}'", manifest.corpus_id, corpus_id_));
  }
  std::string lines;
  for (const auto& r : manifest.records) {
    lines += record_to_json_line(r);
    lines += '\n';
  }
  write_file_atomic(root_ / "manifest.jsonl", lines);
  const json meta{{"corpus_id", manifest.corpus_id},
                  {"created_at", format_timestamp(manifest.created_at)},
                  {"profile", profile_to_json(manifest.profile)},
                  {"seed", manifest.seed}};
  write_file_atomic(root_ / "corpus.json", meta.dump(2) + "\n");
}

CorpusManifest CorpusStore::load_manifest() const {
  if (!has_manifest()) throw Error(fmt::format("corpus '{}' has no manifest under {}", corpus_id_, root_.string()));
  const json meta = json::parse(read_file_text(root_ / "corpus.json"));
  CorpusManifest m;
  m.corpus_id = meta.at("corpus_id").get<std::string>();
  m.created_at = parse_timestamp(meta.at("created_at").get<std::string>());
  m.profile = profile_from_json(meta.at("profile"));
  m.seed = meta.at("seed").get<std::uint64_t>();
  const fs::path lines_path = root_ / "manifest.jsonl";
  if (fs::exists(lines_path)) {
    std::istringstream in(read_file_text(lines_path));
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      m.records.push_back(record_from_json_line(line));
    }
  }
  return m;
}

CorpusManifest CorpusStore::open_or_create(std::uint64_t seed, const ProcessingProfile& profile) const {
  if (has_manifest()) return load_manifest();
  profile.validate();
  CorpusManifest m;
  m.corpus_id = corpus_id_;
  m.created_at = now_utc();
  m.profile = profile;
  m.seed = seed;
  return m;
}

std::string record_to_json_line(const ImageRecord& r) {
  const json j{{"id", r.id},
               {"path", r.path},
               {"role", to_string(r.role)},
               {"split", to_string(r.split)},
               {"width", r.width},
               {"height", r.height},
               {"format", to_string(r.format)},
               {"source_note", r.source_note},
               {"source_id", r.source_id}};
  return j.dump();
}

ImageRecord record_from_json_line(std::string_view line) {
  const json j = json::parse(line);
  ImageRecord r;
  r.id = j.at("id").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.role = parse_role(j.at("role").get<std::string>());
  r.split = parse_split(j.value("split", std::string("NONE")));
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.format = parse_image_format(j.at("format").get<std::string>());
  r.source_note = j.value("source_note", std::string());
  r.source_id = j.value("source_id", std::string());
  return r;
}

ImportResult import_corpus(const fs::path& directory, DatasetRole role, const CorpusManifest& manifest,
                           const CorpusStore& store) {
  if (!fs::is_directory(directory)) throw Error(fmt::format("'{}' is not a directory", directory.string()));
  ImportResult result;
  result.manifest = manifest;
  std::unordered_set<std::string> known;
  for (const auto& r : manifest.records) known.insert(r.id);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  const bool reencode_png = role == DatasetRole::REAL || role == DatasetRole::FAKE;
  for (const auto& file : files) {
    try {
      std::vector<std::uint8_t> bytes = read_file_bytes(file);
      const auto format = sniff_image_format(bytes);
      if (!format) {
        result.warnings.push_back({file.string(), "not a JPEG or PNG file"});
        continue;
      }
      if (reencode_png && *format == ImageFormat::PNG) {
        bytes = encode_jpeg(decode_image(bytes), manifest.profile.jpeg_quality);
      }
      const std::string id = sha256_hex(bytes);
      if (known.contains(id)) {
        result.warnings.push_back({file.string(), fmt::format("duplicate of record {}", id)});
        continue;
      }
      ImageRecord record = store.put(bytes, role, file.filename().string());
      known.insert(record.id);
      result.manifest.records.push_back(std::move(record));
      ++result.added;
    } catch (const DecodeError& e) {
      result.warnings.push_back({file.string(), e.what()});
    }
  }
  return result;
}

ImageRecord simulate_platform_processing(const ImageRecord& record, const ProcessingProfile& profile, bool zoomed,
                                         std::uint64_t rng_seed, const CorpusStore& store) {
  const ZoomParams zoom = zoomed ? draw_zoom(profile, rng_seed) : ZoomParams{};
  return simulate_platform_processing(record, profile, zoomed, zoom, store);
}

ImageRecord simulate_platform_processing(const ImageRecord& record, const ProcessingProfile& profile, bool zoomed,
                                         const ZoomParams& zoom, const CorpusStore& store) {
  const DatasetRole target_role = processed_role(record.role, zoomed);
  const auto source_bytes = store.load_bytes(record);
  const auto out = process_image_bytes(source_bytes, profile, zoomed ? std::optional<ZoomParams>(zoom) : std::nullopt);
  std::string note = zoomed ? fmt::format("zoom={} offset=({},{}) q={}", zoom.factor, zoom.offset_x,
                                          zoom.offset_y, profile.jpeg_quality)
                            : fmt::format("q={}", profile.jpeg_quality);
  ImageRecord processed = store.put(out, target_role, std::move(note));
  processed.source_id = record.id;
  processed.split = zoomed ? Split::TEST : record.split;
  return processed;
}

CorpusManifest assign_splits(const CorpusManifest& manifest, const SplitSpec& spec, std::uint64_t seed) {
  CorpusManifest out = manifest;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < out.records.size(); ++i) index_of[out.records[i].id] = i;

  auto is_derived = [&](const ImageRecord& r) {
    return (is_processed_role(r.role) || is_zoom_role(r.role)) && !r.source_id.empty() &&
           index_of.contains(r.source_id);
  };

  for (const auto& [role, counts] : spec) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < out.records.size(); ++i) {
      if (out.records[i].role == role && !is_derived(out.records[i])) pool.push_back(i);
    }
    if (pool.size() < counts.total()) {
      throw ConfigError(fmt::format("role {}: split needs {} records but only {} available (short by {})",
                                    to_string(role), counts.total(), pool.size(), counts.total() - pool.size()));
    }
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) { return out.records[a].id < out.records[b].id; });
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(role)));
    rng.shuffle(pool);
    for (std::size_t k = 0; k < pool.size(); ++k) {
      Split s = Split::NONE;
      if (k < counts.n_train) {
        s = Split::TRAIN;
      } else if (k < counts.n_train + counts.n_val) {
        s = Split::VAL;
      } else if (k < counts.total()) {
        s = Split::TEST;
      }
      out.records[pool[k]].split = s;
    }
  }

  for (auto& r : out.records) {
    if (is_zoom_role(r.role)) {
      r.split = Split::TEST;
    } else if (is_derived(r)) {
      r.split = out.records[index_of.at(r.source_id)].split;
    }
  }
  return out;
}

CorpusManifest prepare_processed(const CorpusManifest& manifest, const PrepareOptions& options,
                                 const CorpusStore& store) {
  manifest.profile.validate();
  CorpusManifest out = manifest;
  std::set<std::pair<std::string, bool>> done;  // (source id, zoomed)
  std::unordered_set<std::string> known;
  for (const auto& r : manifest.records) {
    known.insert(r.id);
    if (!r.source_id.empty()) done.insert({r.source_id, is_zoom_role(r.role)});
  }
  for (const auto& r : manifest.records) {
    if (r.role != DatasetRole::REAL && r.role != DatasetRole::FAKE) continue;
    const std::uint64_t stream = id_stream(r.id);
    for (const bool zoomed : {false, true}) {
      if (zoomed ? !options.zoomed : !options.processed) continue;
      if (zoomed && r.split != Split::TEST) continue;
      if (done.contains({r.id, zoomed})) continue;
      ImageRecord processed =
          simulate_platform_processing(r, manifest.profile, zoomed, mix_seed(manifest.seed, stream), store);
      if (known.contains(processed.id)) continue;
      known.insert(processed.id);
      out.records.push_back(std::move(processed));
    }
  }
  return out;
}

}  // namespace ganwild
