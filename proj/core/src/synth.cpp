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

#include "ganwild/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include <fmt/format.h>

#include "ganwild/image.hpp"

namespace ganwild {

namespace {

struct Layout {
  Point2 center;    // face center
  double eye_dist;  // normalized
  double roll;      // radians
};

Point2 place(const Layout& l, double dx, double dy) {
  // offsets in units of the inter-eye distance
  const double c = std::cos(l.roll), s = std::sin(l.roll);
  return {l.center.x + l.eye_dist * (c * dx - s * dy), l.center.y + l.eye_dist * (s * dx + c * dy)};
}

constexpr double kEye[2] = {0.5, -0.45};
constexpr double kEar[2] = {1.15, -0.2};
constexpr double kNose[2] = {0.0, 0.05};
constexpr double kMouth[2] = {0.0, 0.5};

FaceGeometry geometry_for(const Layout& l) {
  FaceGeometry g;
  g[Landmark::LEFT_EYE] = place(l, -kEye[0], kEye[1]);
  g[Landmark::RIGHT_EYE] = place(l, kEye[0], kEye[1]);
  g[Landmark::LEFT_EAR] = place(l, -kEar[0], kEar[1]);
  g[Landmark::RIGHT_EAR] = place(l, kEar[0], kEar[1]);
  g[Landmark::NOSE] = place(l, kNose[0], kNose[1]);
  g[Landmark::MOUTH] = place(l, kMouth[0], kMouth[1]);
  const double half_w = 1.25 * l.eye_dist;
  const double half_h = 1.6 * l.eye_dist;
  const double x0 = std::max(0.0, l.center.x - half_w), y0 = std::max(0.0, l.center.y - half_h);
  const double x1 = std::min(1.0, l.center.x + half_w), y1 = std::min(1.0, l.center.y + half_h);
  g.bbox = {x0, y0, x1 - x0, y1 - y0};
  g.confidence = 0.99;
  return g;
}

cv::Point px(const Point2& p, int size) {
  return {static_cast<int>(std::lround(p.x * size)), static_cast<int>(std::lround(p.y * size))};
}

void background(cv::Mat& img, Rng& rng, bool smooth) {
  const cv::Scalar a(rng.uniform(40, 220), rng.uniform(40, 220), rng.uniform(40, 220));
  const cv::Scalar b(rng.uniform(40, 220), rng.uniform(40, 220), rng.uniform(40, 220));
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < img.rows; ++y) {
    auto* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.cols; ++x) {
      const double t = 0.5 + 0.5 * ((x * ca + y * sa) / img.cols);
      for (int c = 0; c < 3; ++c) row[x][c] = cv::saturate_cast<std::uint8_t>(a[c] + (b[c] - a[c]) * t);
    }
  }
  const int blobs = smooth ? 3 : 8;
  for (int i = 0; i < blobs; ++i) {
    const cv::Point c(static_cast<int>(rng.uniform(0, img.cols)), static_cast<int>(rng.uniform(0, img.rows)));
    const int r = static_cast<int>(rng.uniform(img.cols * 0.05, img.cols * 0.3));
    cv::circle(img, c, r, cv::Scalar(rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)), cv::FILLED,
               cv::LINE_AA);
  }
  if (smooth) cv::GaussianBlur(img, img, cv::Size(0, 0), img.cols / 24.0);
}

void draw_face(cv::Mat& img, const Layout& l, Rng& rng) {
  const int n = img.cols;
  const FaceGeometry g = geometry_for(l);
  const double deg = l.roll * 180.0 / std::numbers::pi;
  const double e = l.eye_dist * n;
  const cv::Scalar skin(rng.uniform(60, 200), rng.uniform(90, 210), rng.uniform(140, 240));
  const cv::Scalar hair(rng.uniform(10, 90), rng.uniform(10, 90), rng.uniform(10, 120));
  const cv::Point c = px(l.center, n);
  cv::ellipse(img, px(place(l, 0.0, -0.45), n), cv::Size(static_cast<int>(1.3 * e), static_cast<int>(1.2 * e)), deg, 0,
              360, hair, cv::FILLED, cv::LINE_AA);
  const cv::Size ear(static_cast<int>(std::max(1.0, 0.18 * e)), static_cast<int>(std::max(1.0, 0.32 * e)));
  cv::ellipse(img, px(g[Landmark::LEFT_EAR], n), ear, deg, 0, 360, skin * 0.9, cv::FILLED, cv::LINE_AA);
  cv::ellipse(img, px(g[Landmark::RIGHT_EAR], n), ear, deg, 0, 360, skin * 0.9, cv::FILLED, cv::LINE_AA);
  cv::ellipse(img, c, cv::Size(static_cast<int>(1.05 * e), static_cast<int>(1.4 * e)), deg, 0, 360, skin, cv::FILLED,
              cv::LINE_AA);
  const cv::Size eye(static_cast<int>(std::max(1.0, 0.2 * e)), static_cast<int>(std::max(1.0, 0.1 * e)));
  const cv::Scalar iris(rng.uniform(20, 160), rng.uniform(20, 140), rng.uniform(10, 100));
  for (auto lm : {Landmark::LEFT_EYE, Landmark::RIGHT_EYE}) {
    cv::ellipse(img, px(g[lm], n), eye, deg, 0, 360, cv::Scalar(240, 240, 240), cv::FILLED, cv::LINE_AA);
    cv::circle(img, px(g[lm], n), std::max(1, static_cast<int>(0.08 * e)), iris, cv::FILLED, cv::LINE_AA);
  }
  const std::vector<cv::Point> nose = {px(place(l, 0.0, -0.2), n), px(place(l, -0.12, 0.08), n),
                                       px(place(l, 0.12, 0.08), n)};
  cv::fillConvexPoly(img, nose, skin * 0.8, cv::LINE_AA);
  cv::ellipse(img, px(g[Landmark::MOUTH], n),
              cv::Size(static_cast<int>(std::max(1.0, 0.3 * e)), static_cast<int>(std::max(1.0, 0.1 * e))), deg, 0,
              180, cv::Scalar(60, 60, rng.uniform(120, 200)), std::max(1, static_cast<int>(0.05 * e)), cv::LINE_AA);
}

void add_noise(cv::Mat& img, Rng& rng, double sigma) {
  for (int y = 0; y < img.rows; ++y) {
    auto* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.cols; ++x) {
      for (int c = 0; c < 3; ++c) row[x][c] = cv::saturate_cast<std::uint8_t>(row[x][c] + sigma * rng.normal());
    }
  }
}

void add_upsampling_trace(cv::Mat& img, double amplitude) {
  for (int y = 0; y < img.rows; ++y) {
    auto* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.cols; ++x) {
      const double v = ((x & 2) ^ (y & 2)) ? amplitude : -amplitude;
      for (int c = 0; c < 3; ++c) row[x][c] = cv::saturate_cast<std::uint8_t>(row[x][c] + v);
    }
  }
}

}  // namespace

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::PHOTO: return "photo";
    case SynthKind::GENERATED: return "generated";
    case SynthKind::NO_FACE: return "no_face";
    case SynthKind::SMALL_FACE: return "small_face";
  }
  return "photo";
}

std::array<double, kNumLandmarkCoords> canonical_layout() {
  return geometry_for({{0.5, 0.52}, 0.24, 0.0}).coordinates();
}

SynthImage render_synthetic(SynthKind kind, int size, std::uint64_t seed) {
  if (size < 32) throw ConfigError("synthetic images need size >= 32");
  Rng rng(seed);
  SynthImage out;
  out.image = cv::Mat(size, size, CV_8UC3);
  background(out.image, rng, kind == SynthKind::GENERATED);
  std::optional<Layout> layout;
  switch (kind) {
    case SynthKind::GENERATED:
      layout = Layout{{0.5 + 0.004 * rng.normal(), 0.52 + 0.004 * rng.normal()}, 0.24 + 0.003 * rng.normal(),
                      0.01 * rng.normal()};
      break;
    case SynthKind::PHOTO: {
      const double ed = rng.uniform(0.12, 0.28);
      layout = Layout{{rng.uniform(0.35, 0.65), rng.uniform(0.4, 0.6)}, ed, rng.uniform(-0.3, 0.3)};
      break;
    }
    case SynthKind::SMALL_FACE: {
      const double ed = rng.uniform(0.04, 0.09);
      layout = Layout{{rng.uniform(0.2, 0.8), rng.uniform(0.25, 0.75)}, ed, rng.uniform(-0.3, 0.3)};
      break;
    }
    case SynthKind::NO_FACE:
      break;
  }
  if (layout) {
    draw_face(out.image, *layout, rng);
    out.faces.push_back(geometry_for(*layout));
  }
  if (kind == SynthKind::GENERATED) {
    add_noise(out.image, rng, 1.5);
    add_upsampling_trace(out.image, 5.0);
  } else {
    add_noise(out.image, rng, 4.0);
  }
  return out;
}

SynthCorpusSummary write_synthetic_corpus(const fs::path& out, const SynthCorpusOptions& options) {
  SynthCorpusSummary s{0, out / "real", out / "fake", out / "wild", out / "faces"};
  for (const auto& d : {s.real_dir, s.fake_dir, s.wild_dir, s.faces_dir}) fs::create_directories(d);

  auto emit = [&](const fs::path& dir, std::size_t index, SynthKind kind, std::uint64_t seed) {
    const SynthImage img = render_synthetic(kind, options.size, seed);
    const auto bytes = encode_jpeg(img.image, options.jpeg_quality);
    write_file_atomic(dir / fmt::format("{:05}.jpg", index), bytes);
    const std::string id = sha256_hex(bytes);
    write_sidecar(s.faces_dir, id, img.faces, options.size, options.size);
    ++s.written;
    return id;
  };

  for (std::size_t i = 0; i < options.real; ++i) emit(s.real_dir, i, SynthKind::PHOTO, mix_seed(options.seed, 2 * i));
  for (std::size_t i = 0; i < options.fake; ++i) {
    emit(s.fake_dir, i, SynthKind::GENERATED, mix_seed(options.seed, 2 * i + 1));
  }
  std::string truth = "image_id,kind\n";
  Rng rng(mix_seed(options.seed, 0x3117d));
  for (std::size_t i = 0; i < options.wild; ++i) {
    const double u = rng.uniform01();
    SynthKind kind = SynthKind::PHOTO;
    if (u < options.wild_generated) {
      kind = SynthKind::GENERATED;
    } else if (u < options.wild_generated + options.wild_no_face) {
      kind = SynthKind::NO_FACE;
    } else if (u < options.wild_generated + options.wild_no_face + options.wild_small_face) {
      kind = SynthKind::SMALL_FACE;
    }
    const std::string id = emit(s.wild_dir, i, kind, mix_seed(options.seed, 0x1000000 + i));
    truth += fmt::format("{},{}\n", id, to_string(kind));
  }
  write_file_atomic(out / "wild_truth.csv", truth);
  return s;
}

}  // namespace ganwild
