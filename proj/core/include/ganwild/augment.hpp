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

#ifndef GANWILD_AUGMENT_HPP_
#define GANWILD_AUGMENT_HPP_

#include <cstdint>

#include <opencv2/core.hpp>

#include "ganwild/common.hpp"

namespace ganwild {

struct AugmentationConfig {
  double probability = 0.1;
  int blur_kernel = 9;
  double blur_sigma_min = 0.5;
  double blur_sigma_max = 5.0;
  int jpeg_quality_min = 30;
  int jpeg_quality_max = 100;
  double resize_scale_min = 0.25;
  double resize_scale_max = 0.75;
  double resize_aspect_min = 0.8;
  double resize_aspect_max = 1.25;

  void validate() const;
  friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

// One realization of the augmentation randomness. Parameters are drawn
// whether or not the perturbation fires, so the stream layout is fixed.
struct AugmentationDraw {
  bool blur = false;
  bool jpeg = false;
  bool resize = false;
  double blur_sigma = 0.0;
  int jpeg_quality = 100;
  double resize_scale = 1.0;
  double resize_aspect = 1.0;
};

AugmentationDraw draw_augmentation(const AugmentationConfig& config, Rng& rng);

// Applies the fired perturbations in the fixed order blur -> jpeg -> resize.
// The resize perturbation rescales and then restores the input size.
cv::Mat apply_augmentation(const cv::Mat& image, const AugmentationConfig& config, const AugmentationDraw& draw);

cv::Mat augment(const cv::Mat& image, const AugmentationConfig& config, std::uint64_t rng_seed);

}  // namespace ganwild

#endif  // GANWILD_AUGMENT_HPP_
