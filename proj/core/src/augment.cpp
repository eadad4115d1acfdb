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

#include "ganwild/augment.hpp"

#include <opencv2/imgproc.hpp>

#include "ganwild/image.hpp"

namespace ganwild {

void AugmentationConfig::validate() const {
  if (probability < 0.0 || probability > 1.0) throw ConfigError("augmentation probability outside [0, 1]");
  if (blur_kernel <= 0 || blur_kernel % 2 == 0) throw ConfigError("blur kernel must be a positive odd size");
  if (blur_sigma_min <= 0.0 || blur_sigma_max < blur_sigma_min) throw ConfigError("invalid blur sigma range");
  if (jpeg_quality_min < 1 || jpeg_quality_max > 100 || jpeg_quality_max < jpeg_quality_min) {
    throw ConfigError("invalid JPEG quality range");
  }
  if (resize_scale_min <= 0.0 || resize_scale_max < resize_scale_min) throw ConfigError("invalid resize scale range");
  if (resize_aspect_min <= 0.0 || resize_aspect_max < resize_aspect_min) throw ConfigError("invalid aspect range");
}

AugmentationDraw draw_augmentation(const AugmentationConfig& config, Rng& rng) {
  AugmentationDraw d;
  d.blur = rng.bernoulli(config.probability);
  d.blur_sigma = rng.uniform(config.blur_sigma_min, config.blur_sigma_max);
  d.jpeg = rng.bernoulli(config.probability);
  d.jpeg_quality = static_cast<int>(rng.uniform_int(config.jpeg_quality_min, config.jpeg_quality_max));
  d.resize = rng.bernoulli(config.probability);
  d.resize_scale = rng.uniform(config.resize_scale_min, config.resize_scale_max);
  d.resize_aspect = rng.uniform(config.resize_aspect_min, config.resize_aspect_max);
  return d;
}

cv::Mat apply_augmentation(const cv::Mat& image, const AugmentationConfig& config, const AugmentationDraw& draw) {
  cv::Mat out = image.clone();
  if (draw.blur) {
    cv::GaussianBlur(out, out, cv::Size(config.blur_kernel, config.blur_kernel), draw.blur_sigma, draw.blur_sigma,
                     cv::BORDER_REFLECT_101);
  }
  if (draw.jpeg) out = jpeg_roundtrip(out, draw.jpeg_quality);
  if (draw.resize) {
    const double root_aspect = std::sqrt(draw.resize_aspect);
    const int w = std::max(1, static_cast<int>(std::lround(out.cols * draw.resize_scale * root_aspect)));
    const int h = std::max(1, static_cast<int>(std::lround(out.rows * draw.resize_scale / root_aspect)));
    out = resize_bilinear(resize_bilinear(out, w, h), image.cols, image.rows);
  }
  return out;
}

cv::Mat augment(const cv::Mat& image, const AugmentationConfig& config, std::uint64_t rng_seed) {
  config.validate();
  Rng rng(rng_seed);
  return apply_augmentation(image, config, draw_augmentation(config, rng));
}

}  // namespace ganwild
