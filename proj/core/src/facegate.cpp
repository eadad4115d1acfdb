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

#include "ganwild/facegate.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

constexpr std::string_view kLandmarkNames[] = {"left_eye", "right_eye", "left_ear", "right_ear", "nose", "mouth"};
constexpr std::string_view kReasonNames[] = {"NO_FACE", "FACE_TOO_SMALL", "PASS", "DECODE_ERROR"};

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

json face_to_json(const FaceGeometry& f) {
  json lm = json::object();
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    lm[std::string(kLandmarkNames[i])] = {f.landmarks[i].x, f.landmarks[i].y};
  }
  return json{{"bbox", {f.bbox.x, f.bbox.y, f.bbox.w, f.bbox.h}}, {"landmarks", lm}, {"confidence", f.confidence}};
}

FaceGeometry face_from_json(const json& j) {
  FaceGeometry f;
  const auto& b = j.at("bbox");
  f.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
  const auto& lm = j.at("landmarks");
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto& p = lm.at(std::string(kLandmarkNames[i]));
    f.landmarks[i] = {p.at(0).get<double>(), p.at(1).get<double>()};
  }
  f.confidence = j.value("confidence", 1.0);
  return f;
}

}  // namespace

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(Landmark landmark) { return kLandmarkNames[static_cast<std::size_t>(landmark)]; }

std::array<double, kNumLandmarkCoords> FaceGeometry::coordinates() const {
  std::array<double, kNumLandmarkCoords> c{};
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    c[2 * i] = landmarks[i].x;
    c[2 * i + 1] = landmarks[i].y;
  }
  return c;
}

FaceGeometry FaceGeometry::from_coordinates(const std::array<double, kNumLandmarkCoords>& coords, BoundingBox bbox,
                                            double confidence) {
  FaceGeometry f;
  f.bbox = bbox;
  f.confidence = confidence;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) f.landmarks[i] = {coords[2 * i], coords[2 * i + 1]};
  return f;
}

bool FaceGeometry::is_valid() const {
  try {
    validate();
    return true;
  } catch (const Error&) {
    return false;
  }
}

void FaceGeometry::validate() const {
  if (!in_unit(bbox.x) || !in_unit(bbox.y) || !in_unit(bbox.w) || !in_unit(bbox.h)) {
    throw Error("face bbox coordinates must lie in [0, 1]");
  }
  if (!(bbox.area() > 0.0)) throw Error("face bbox must have positive area");
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    if (!in_unit(landmarks[i].x) || !in_unit(landmarks[i].y)) {
      throw Error(fmt::format("landmark {} outside [0, 1]", kLandmarkNames[i]));
    }
  }
  if (!in_unit(confidence)) throw Error("face confidence must lie in [0, 1]");
}

std::vector<FaceGeometry> SidecarFaceDetector::detect(const ImageRecord& record, const cv::Mat& image) const {
  (void)image;
  const fs::path own = dir_ / (record.id + ".json");
  if (fs::exists(own)) return faces_from_json(read_file_text(own));
  if (record.source_id.empty()) return {};
  const fs::path src = dir_ / (record.source_id + ".json");
  if (!fs::exists(src)) return {};
  auto faces = faces_from_json(read_file_text(src));
  if (is_zoom_role(record.role)) {
    const auto zoom = parse_zoom_note(record.source_note);
    if (!zoom) return {};
    // The crop is computed at the source pixel size stored in the sidecar.
    const json meta = json::parse(read_file_text(src));
    const int sw = meta.value("width", 1024);
    const int sh = meta.value("height", 1024);
    return crop_geometry(faces, sw, sh, zoom_crop_rect(sw, sh, *zoom));
  }
  return faces;
}

std::unique_ptr<FaceDetector> make_face_detector(std::string_view spec) {
  constexpr std::string_view kSidecar = "sidecar:";
  if (spec.substr(0, kSidecar.size()) == kSidecar) {
    return std::make_unique<SidecarFaceDetector>(fs::path(std::string(spec.substr(kSidecar.size()))));
  }
  throw ConfigError(fmt::format("unknown face detector '{}' (expected sidecar:<dir>)", spec));
}

std::string faces_to_json(std::span<const FaceGeometry> faces, int width, int height) {
  json arr = json::array();
  for (const auto& f : faces) arr.push_back(face_to_json(f));
  json j{{"faces", arr}};
  if (width > 0 && height > 0) {
    j["width"] = width;
    j["height"] = height;
  }
  return j.dump(2) + "\n";
}

std::vector<FaceGeometry> faces_from_json(std::string_view text) {
  const json j = json::parse(text);
  std::vector<FaceGeometry> faces;
  for (const auto& f : j.at("faces")) faces.push_back(face_from_json(f));
  return faces;
}

void write_sidecar(const fs::path& directory, std::string_view image_id, std::span<const FaceGeometry> faces,
                   int width, int height) {
  write_file_atomic(directory / (std::string(image_id) + ".json"), faces_to_json(faces, width, height));
}

std::vector<FaceGeometry> crop_geometry(std::span<const FaceGeometry> faces, int source_width, int source_height,
                                        const cv::Rect& rect) {
  std::vector<FaceGeometry> out;
  const double sx = static_cast<double>(source_width) / rect.width;
  const double sy = static_cast<double>(source_height) / rect.height;
  const double ox = static_cast<double>(rect.x) / source_width;
  const double oy = static_cast<double>(rect.y) / source_height;
  auto map_x = [&](double x) { return (x - ox) * sx; };
  auto map_y = [&](double y) { return (y - oy) * sy; };
  for (const auto& f : faces) {
    FaceGeometry g = f;
    bool inside = true;
    for (auto& p : g.landmarks) {
      p = {map_x(p.x), map_y(p.y)};
      inside = inside && in_unit(p.x) && in_unit(p.y);
    }
    if (!inside) continue;
    const double x0 = std::clamp(map_x(f.bbox.x), 0.0, 1.0);
    const double y0 = std::clamp(map_y(f.bbox.y), 0.0, 1.0);
    const double x1 = std::clamp(map_x(f.bbox.x + f.bbox.w), 0.0, 1.0);
    const double y1 = std::clamp(map_y(f.bbox.y + f.bbox.h), 0.0, 1.0);
    g.bbox = {x0, y0, x1 - x0, y1 - y0};
    if (g.bbox.area() <= 0.0) continue;
    out.push_back(g);
  }
  return out;
}

std::optional<FaceGeometry> select_primary_face(std::span<const FaceGeometry> faces) {
  if (faces.empty()) return std::nullopt;
  auto better = [](const FaceGeometry& a, const FaceGeometry& b) {
    if (a.bbox.area() != b.bbox.area()) return a.bbox.area() > b.bbox.area();
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.bbox.x != b.bbox.x) return a.bbox.x < b.bbox.x;
    return a.bbox.y < b.bbox.y;
  };
  const FaceGeometry* best = &faces.front();
  for (const auto& f : faces.subspan(1)) {
    if (better(f, *best)) best = &f;
  }
  return *best;
}

std::string_view to_string(GateReason reason) { return kReasonNames[static_cast<std::size_t>(reason)]; }

GateReason parse_gate_reason(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kReasonNames); ++i) {
    if (text == kReasonNames[i]) return static_cast<GateReason>(i);
  }
  throw Error(fmt::format("unknown gate reason '{}'", text));
}

GateDecision gate_faces(std::string_view image_id, std::span<const FaceGeometry> faces, double min_eye_distance) {
  GateDecision d;
  d.image_id = std::string(image_id);
  const auto primary = select_primary_face(faces);
  if (!primary) {
    d.reason = GateReason::NO_FACE;
    return d;
  }
  d.geometry = primary;
  d.eye_distance = primary->eye_distance();
  d.passed = *d.eye_distance >= min_eye_distance;
  d.reason = d.passed ? GateReason::PASS : GateReason::FACE_TOO_SMALL;
  return d;
}

GateDecision prefilter(const ImageRecord& record, std::span<const std::uint8_t> bytes, const FaceDetector& detector,
                       double min_eye_distance) {
  const cv::Mat image = decode_image(bytes);
  const auto faces = detector.detect(record, image);
  return gate_faces(record.id, faces, min_eye_distance);
}

double GateCounts::reduction_percent() const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  return 100.0 * static_cast<double>(n - pass) / static_cast<double>(n);
}

GateCounts& GateCounts::operator+=(const GateCounts& o) {
  pass += o.pass;
  no_face += o.no_face;
  too_small += o.too_small;
  errors += o.errors;
  return *this;
}

void GateCounts::add(GateReason reason) {
  switch (reason) {
    case GateReason::PASS: ++pass; break;
    case GateReason::NO_FACE: ++no_face; break;
    case GateReason::FACE_TOO_SMALL: ++too_small; break;
    case GateReason::DECODE_ERROR: ++errors; break;
  }
}

GateCounts count_decisions(std::span<const GateDecision> decisions) {
  GateCounts c;
  for (const auto& d : decisions) c.add(d.reason);
  return c;
}

GateReport gate_corpus(const CorpusManifest& manifest, const CorpusStore& store, const FaceDetector& detector,
                       double min_eye_distance) {
  if (manifest.records.empty()) throw Error("gate_corpus: manifest is empty");
  GateReport report;
  report.decisions.reserve(manifest.records.size());
  for (const auto& record : manifest.records) {
    GateDecision d;
    try {
      d = prefilter(record, store.load_bytes(record), detector, min_eye_distance);
    } catch (const DecodeError& e) {
      d.image_id = record.id;
      d.reason = GateReason::DECODE_ERROR;
      d.error = e.what();
    } catch (const Error& e) {
      // Unreadable file on disk is logged the same way as a decode failure.
      d.image_id = record.id;
      d.reason = GateReason::DECODE_ERROR;
      d.error = e.what();
    }
    report.per_role[record.role].add(d.reason);
    report.overall.add(d.reason);
    report.decisions.push_back(std::move(d));
  }
  return report;
}

std::string gate_decision_to_json_line(const GateDecision& d) {
  json j{{"image_id", d.image_id}, {"passed", d.passed}, {"reason", to_string(d.reason)}};
  j["eye_distance"] = d.eye_distance ? json(*d.eye_distance) : json(nullptr);
  if (d.geometry) {
    const json f = face_to_json(*d.geometry);
    j["bbox"] = f.at("bbox");
    j["landmarks"] = f.at("landmarks");
    j["confidence"] = f.at("confidence");
  } else {
    j["bbox"] = nullptr;
    j["landmarks"] = nullptr;
  }
  if (!d.error.empty()) j["error"] = d.error;
  return j.dump();
}

GateDecision gate_decision_from_json_line(std::string_view line) {
  const json j = json::parse(line);
  GateDecision d;
  d.image_id = j.at("image_id").get<std::string>();
  d.passed = j.at("passed").get<bool>();
  d.reason = parse_gate_reason(j.at("reason").get<std::string>());
  if (j.contains("eye_distance") && !j.at("eye_distance").is_null()) d.eye_distance = j.at("eye_distance").get<double>();
  if (j.contains("bbox") && !j.at("bbox").is_null()) d.geometry = face_from_json(j);
  d.error = j.value("error", std::string());
  return d;
}

std::vector<GateDecision> read_gate_log(const fs::path& path) {
  std::vector<GateDecision> out;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(gate_decision_from_json_line(line));
  }
  return out;
}

void write_gate_log(const fs::path& path, std::span<const GateDecision> decisions) {
  std::string text;
  for (const auto& d : decisions) {
    text += gate_decision_to_json_line(d);
    text += '\n';
  }
  write_file_atomic(path, text);
}

}  // namespace ganwild
