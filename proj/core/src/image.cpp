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

#include "ganwild/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <fmt/format.h>

#include "ganwild/common.hpp"

namespace ganwild {

std::string_view to_string(ImageFormat format) {
  return format == ImageFormat::JPEG ? "JPEG" : "PNG";
}

ImageFormat parse_image_format(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "jpeg" || lower == "jpg") return ImageFormat::JPEG;
  if (lower == "png") return ImageFormat::PNG;
  throw Error(fmt::format("unknown image format '{}'", text));
}

std::optional<ImageFormat> sniff_image_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return ImageFormat::JPEG;
  static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) return ImageFormat::PNG;
  return std::nullopt;
}

std::string_view file_extension(ImageFormat format) {
  return format == ImageFormat::JPEG ? ".jpg" : ".png";
}

cv::Mat decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DecodeError("empty image buffer");
  if (!sniff_image_format(bytes)) throw DecodeError("not a JPEG or PNG stream");
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(buffer, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw DecodeError(fmt::format("image decode failed: {}", e.what()));
  }
  if (decoded.empty()) throw DecodeError("image decode failed");
  return decoded;
}

std::vector<std::uint8_t> encode_jpeg(const cv::Mat& image, int quality) {
  if (quality < 1 || quality > 100) throw Error(fmt::format("JPEG quality {} outside [1, 100]", quality));
  std::vector<std::uint8_t> out;
  const std::vector<int> params = {cv::IMWRITE_JPEG_QUALITY, quality};
  if (!cv::imencode(".jpg", image, out, params)) throw Error("JPEG encoding failed");
  return out;
}

std::vector<std::uint8_t> encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> out;
  const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imencode(".png", image, out, params)) throw Error("PNG encoding failed");
  return out;
}

std::vector<std::uint8_t> encode_image(const cv::Mat& image, ImageFormat format, int jpeg_quality) {
  return format == ImageFormat::JPEG ? encode_jpeg(image, jpeg_quality) : encode_png(image);
}

cv::Mat resize_bilinear(const cv::Mat& image, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("resize target must be positive");
  if (image.cols == width && image.rows == height) return image.clone();
  cv::Mat out;
  cv::resize(image, out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  return out;
}

cv::Mat jpeg_roundtrip(const cv::Mat& image, int quality) {
  const auto bytes = encode_jpeg(image, quality);
  return decode_image(bytes);
}

}  // namespace ganwild
