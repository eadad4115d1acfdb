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

#ifndef GANWILD_FACEGATE_HPP_
#define GANWILD_FACEGATE_HPP_

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "ganwild/ingest.hpp"

namespace ganwild {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b);

enum class Landmark { LEFT_EYE = 0, RIGHT_EYE, LEFT_EAR, RIGHT_EAR, NOSE, MOUTH };
inline constexpr std::size_t kNumLandmarks = 6;
inline constexpr std::size_t kNumLandmarkCoords = 2 * kNumLandmarks;
std::string_view to_string(Landmark landmark);

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double area() const { return w * h; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Face box and six landmarks in normalized [0, 1] image coordinates.
struct FaceGeometry {
  BoundingBox bbox;
  std::array<Point2, kNumLandmarks> landmarks{};
  double confidence = 1.0;

  const Point2& operator[](Landmark l) const { return landmarks[static_cast<std::size_t>(l)]; }
  Point2& operator[](Landmark l) { return landmarks[static_cast<std::size_t>(l)]; }

  // Landmark coordinates in index order: (x, y) of left eye, right eye,
  // left ear, right ear, nose, mouth.
  std::array<double, kNumLandmarkCoords> coordinates() const;
  static FaceGeometry from_coordinates(const std::array<double, kNumLandmarkCoords>& coords, BoundingBox bbox,
                                       double confidence = 1.0);

  bool is_valid() const;
  // Throws Error describing the first violated invariant.
  void validate() const;
  double eye_distance() const { return distance((*this)[Landmark::LEFT_EYE], (*this)[Landmark::RIGHT_EYE]); }

  friend bool operator==(const FaceGeometry&, const FaceGeometry&) = default;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  // Output order carries no meaning.
  virtual std::vector<FaceGeometry> detect(const ImageRecord& record, const cv::Mat& image) const = 0;
  virtual std::string name() const = 0;
};

// Reads ground-truth geometry from `<dir>/<image_id>.json`:
//   {"faces": [{"bbox": [x, y, w, h],
//               "landmarks": {"left_eye": [x, y], ...},
//               "confidence": c}],
//    "width": w, "height": h}          (optional source pixel size)
// Processed records without their own sidecar reuse their source's file;
// zoom records get the source geometry mapped through the recorded crop.
// A record with no sidecar has no faces.
class SidecarFaceDetector final : public FaceDetector {
 public:
  explicit SidecarFaceDetector(fs::path directory) : dir_(std::move(directory)) {}
  std::vector<FaceGeometry> detect(const ImageRecord& record, const cv::Mat& image) const override;
  std::string name() const override { return "sidecar"; }

  const fs::path& directory() const { return dir_; }

 private:
  fs::path dir_;
};

// "sidecar:<dir>" is the only built-in detector spec.
std::unique_ptr<FaceDetector> make_face_detector(std::string_view spec);

std::string faces_to_json(std::span<const FaceGeometry> faces, int width = 0, int height = 0);
std::vector<FaceGeometry> faces_from_json(std::string_view text);
void write_sidecar(const fs::path& directory, std::string_view image_id, std::span<const FaceGeometry> faces,
                   int width = 0, int height = 0);

// Maps geometry from a source image into the crop `rect` of a
// source_width x source_height image. Boxes are clipped to the crop; faces
// whose landmarks leave the crop are dropped.
std::vector<FaceGeometry> crop_geometry(std::span<const FaceGeometry> faces, int source_width, int source_height,
                                        const cv::Rect& rect);

// Largest bbox area; ties by higher confidence, then smallest (x, y).
std::optional<FaceGeometry> select_primary_face(std::span<const FaceGeometry> faces);

enum class GateReason { NO_FACE, FACE_TOO_SMALL, PASS, DECODE_ERROR };
std::string_view to_string(GateReason reason);
GateReason parse_gate_reason(std::string_view text);

inline constexpr double kDefaultMinEyeDistance = 0.1;

struct GateDecision {
  std::string image_id;
  bool passed = false;
  GateReason reason = GateReason::NO_FACE;
  std::optional<FaceGeometry> geometry;
  std::optional<double> eye_distance;
  std::string error;  // only for DECODE_ERROR log entries
};

// Decision from detector output alone.
GateDecision gate_faces(std::string_view image_id, std::span<const FaceGeometry> faces, double min_eye_distance);

// Throws DecodeError if the bytes do not decode.
GateDecision prefilter(const ImageRecord& record, std::span<const std::uint8_t> bytes, const FaceDetector& detector,
                       double min_eye_distance = kDefaultMinEyeDistance);

struct GateCounts {
  std::size_t pass = 0;
  std::size_t no_face = 0;
  std::size_t too_small = 0;
  std::size_t errors = 0;

  std::size_t total() const { return pass + no_face + too_small + errors; }
  // Percentage of images discarded by the gate.
  double reduction_percent() const;
  GateCounts& operator+=(const GateCounts& other);
  void add(GateReason reason);
  friend bool operator==(const GateCounts&, const GateCounts&) = default;
};

struct GateReport {
  std::map<DatasetRole, GateCounts> per_role;
  GateCounts overall;
  std::vector<GateDecision> decisions;  // manifest order
};

GateCounts count_decisions(std::span<const GateDecision> decisions);

GateReport gate_corpus(const CorpusManifest& manifest, const CorpusStore& store, const FaceDetector& detector,
                       double min_eye_distance = kDefaultMinEyeDistance);

std::string gate_decision_to_json_line(const GateDecision& decision);
GateDecision gate_decision_from_json_line(std::string_view line);
std::vector<GateDecision> read_gate_log(const fs::path& path);
void write_gate_log(const fs::path& path, std::span<const GateDecision> decisions);

}  // namespace ganwild

#endif  // GANWILD_FACEGATE_HPP_
