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

#ifndef GANWILD_IMAGE_HPP_
#define GANWILD_IMAGE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

namespace ganwild {

enum class ImageFormat { JPEG, PNG };

std::string_view to_string(ImageFormat format);
ImageFormat parse_image_format(std::string_view text);
std::optional<ImageFormat> sniff_image_format(std::span<const std::uint8_t> bytes);
std::string_view file_extension(ImageFormat format);

// Decodes to 8-bit, 3-channel BGR. Throws DecodeError.
cv::Mat decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_jpeg(const cv::Mat& image, int quality);
std::vector<std::uint8_t> encode_png(const cv::Mat& image);
std::vector<std::uint8_t> encode_image(const cv::Mat& image, ImageFormat format, int jpeg_quality);

cv::Mat resize_bilinear(const cv::Mat& image, int width, int height);
// JPEG round trip at the given quality.
cv::Mat jpeg_roundtrip(const cv::Mat& image, int quality);

}  // namespace ganwild

#endif  // GANWILD_IMAGE_HPP_
