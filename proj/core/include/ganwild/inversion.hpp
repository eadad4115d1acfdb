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

#ifndef GANWILD_INVERSION_HPP_
#define GANWILD_INVERSION_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "ganwild/common.hpp"

namespace ganwild {

// Planar images used by inversion: RGB, channel-major, values in [0, 1],
// 3 * resolution * resolution entries.
std::vector<double> to_planar(const cv::Mat& bgr, int resolution);
cv::Mat from_planar(std::span<const double> planar, int resolution);

class GeneratorAdapter {
 public:
  virtual ~GeneratorAdapter() = default;
  virtual std::string name() const = 0;
  virtual int latent_dim() const = 0;
  virtual int resolution() const = 0;
  virtual bool differentiable() const = 0;
  // Standard deviation of the latent prior; scales the exploration noise.
  virtual double latent_std() const { return 1.0; }
  // Deterministic per latent.
  virtual std::vector<double> generate(std::span<const double> latent) const = 0;
  // Gradient of dot(grad_image, generate(latent)) with respect to latent.
  // Throws Error unless differentiable().
  virtual std::vector<double> vjp(std::span<const double> latent, std::span<const double> grad_image) const;

  cv::Mat generate_image(std::span<const double> latent) const { return from_planar(generate(latent), resolution()); }
};

// Linear map latent -> 8 x (r/4) x (r/4) features, nearest 4x upsampling, a
// 3x3 convolution to RGB, then 0.5 * (1 + tanh). Weights come from the seed.
class ToyGenerator final : public GeneratorAdapter {
 public:
  explicit ToyGenerator(std::uint64_t seed = 0, int latent_dim = 64, int resolution = 32);
  std::string name() const override;
  int latent_dim() const override { return latent_dim_; }
  int resolution() const override { return resolution_; }
  bool differentiable() const override { return true; }
  std::vector<double> generate(std::span<const double> latent) const override;
  std::vector<double> vjp(std::span<const double> latent, std::span<const double> grad_image) const override;

 private:
  std::vector<double> preactivation(std::span<const double> latent) const;

  std::uint64_t seed_;
  int latent_dim_;
  int resolution_;
  std::vector<double> matrix_;  // (3 r r) x latent_dim, row-major
  std::vector<double> bias_;
};

// "toy", "toy:<seed>", or a file whose content is one of those.
std::unique_ptr<GeneratorAdapter> make_generator(std::string_view spec);

class PerceptualDistance {
 public:
  virtual ~PerceptualDistance() = default;
  virtual std::string name() const = 0;
  // Optionally writes d distance / d a into grad_a.
  virtual double distance(std::span<const double> a, std::span<const double> b, int resolution,
                          std::vector<double>* grad_a) const = 0;
};

// Mean squared error standing in for a learned perceptual metric.
class MsePerceptualDistance final : public PerceptualDistance {
 public:
  std::string name() const override { return "mse"; }
  double distance(std::span<const double> a, std::span<const double> b, int resolution,
                  std::vector<double>* grad_a) const override;
};

double mean_squared_error(std::span<const double> a, std::span<const double> b);

struct InversionConfig {
  int steps = 1000;
  double initial_lr = 0.1;
  double lr_rampup = 0.05;
  double lr_rampdown = 0.25;
  double initial_noise_factor = 0.05;
  double noise_ramp = 0.75;
  std::uint64_t seed = 0;

  void validate() const;
};

struct InversionResult {
  std::string image_id;
  std::vector<double> latent;
  cv::Mat reconstruction;  // BGR at generator resolution
  double lpips = 0.0;      // perceptual distance of the best latent
  double mse = 0.0;
  int steps = 0;
  bool diverged = false;
  std::string generator;
  std::string perceptual;
};

// Adam over the latent with warmup / cosine rampdown of the step size and
// decaying latent noise. Returns the best latent seen. The image is resized
// to the generator resolution.
InversionResult invert(std::string image_id, const cv::Mat& image, const GeneratorAdapter& generator,
                       const PerceptualDistance& perceptual, const InversionConfig& config = {});

inline constexpr int kCompositeCaptionHeight = 40;
// Narrower originals are upscaled so the caption fits.
inline constexpr int kCompositeMinPanelWidth = 160;

// Original on the left, reconstruction (resized to match) on the right, and a
// caption band with both distances underneath.
cv::Mat composite(const cv::Mat& original, const InversionResult& result);

// inversions/<image_id>.json and inversions/<image_id>_sbs.jpg
std::string inversion_to_json(const InversionResult& result);
InversionResult inversion_from_json(std::string_view text);
void save_inversion(const fs::path& directory, const InversionResult& result, const cv::Mat& original);

}  // namespace ganwild

#endif  // GANWILD_INVERSION_HPP_
