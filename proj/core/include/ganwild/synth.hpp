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

#ifndef GANWILD_SYNTH_HPP_
#define GANWILD_SYNTH_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "ganwild/facegate.hpp"

namespace ganwild {

// Procedural stand-ins for face photographs. "Generated" faces sit at a fixed
// canonical landmark layout (small jitter) and carry a faint period-4
// checkerboard, the kind of trace upsampling layers leave. "Photographed"
// faces vary in position, size and roll and have no such trace.
enum class SynthKind { PHOTO, GENERATED, NO_FACE, SMALL_FACE };
std::string_view to_string(SynthKind kind);

struct SynthImage {
  cv::Mat image;  // BGR
  std::vector<FaceGeometry> faces;
};

// Canonical landmark layout of generated faces, coordinates() order.
std::array<double, kNumLandmarkCoords> canonical_layout();

SynthImage render_synthetic(SynthKind kind, int size, std::uint64_t seed);

struct SynthCorpusOptions {
  std::size_t real = 200;
  std::size_t fake = 200;
  std::size_t wild = 0;
  int size = 128;
  int jpeg_quality = 90;
  std::uint64_t seed = 0;
  // Composition of the wild set; the remainder are photographed faces.
  double wild_generated = 0.1;
  double wild_no_face = 0.4;
  double wild_small_face = 0.2;
};

struct SynthCorpusSummary {
  std::size_t written = 0;
  fs::path real_dir;
  fs::path fake_dir;
  fs::path wild_dir;
  fs::path faces_dir;
};

// Writes <out>/{real,fake,wild}/NNNNN.jpg, a sidecar per image under
// <out>/faces/ named by the JPEG's content hash, and <out>/wild_truth.csv.
SynthCorpusSummary write_synthetic_corpus(const fs::path& out, const SynthCorpusOptions& options);

}  // namespace ganwild

#endif  // GANWILD_SYNTH_HPP_
