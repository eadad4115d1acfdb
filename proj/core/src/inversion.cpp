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

#include "ganwild/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include <fmt/format.h>

#include "ganwild/image.hpp"
#include "json.hpp"

namespace ganwild {

using nlohmann::json;

std::vector<double> to_planar(const cv::Mat& bgr, int resolution) {
  if (bgr.empty() || bgr.type() != CV_8UC3) throw Error("inversion expects a BGR 8-bit image");
  const cv::Mat img =
      (bgr.cols == resolution && bgr.rows == resolution) ? bgr : resize_bilinear(bgr, resolution, resolution);
  const std::size_t plane = static_cast<std::size_t>(resolution) * resolution;
  std::vector<double> out(3 * plane);
  for (int y = 0; y < resolution; ++y) {
    const auto* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < resolution; ++x) {
      for (int c = 0; c < 3; ++c) out[c * plane + y * resolution + x] = row[x][2 - c] / 255.0;
    }
  }
  return out;
}

cv::Mat from_planar(std::span<const double> planar, int resolution) {
  const std::size_t plane = static_cast<std::size_t>(resolution) * resolution;
  if (planar.size() != 3 * plane) throw Error("planar image size does not match resolution");
  cv::Mat out(resolution, resolution, CV_8UC3);
  for (int y = 0; y < resolution; ++y) {
    auto* row = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < resolution; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(planar[c * plane + y * resolution + x], 0.0, 1.0);
        row[x][2 - c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

std::vector<double> GeneratorAdapter::vjp(std::span<const double>, std::span<const double>) const {
  throw Error(fmt::format("generator '{}' is not differentiable", name()));
}

ToyGenerator::ToyGenerator(std::uint64_t seed, int latent_dim, int resolution)
    : seed_(seed), latent_dim_(latent_dim), resolution_(resolution) {
  if (latent_dim <= 0) throw ConfigError("toy generator latent_dim must be positive");
  if (resolution < 8 || resolution % 4 != 0) throw ConfigError("toy generator resolution must be a multiple of 4, >= 8");
  constexpr int kChannels = 8;
  constexpr double kGain = 0.75;
  const int f = resolution / 4;
  const int r = resolution;
  Rng rng(mix_seed(seed, 0x70e));

  std::vector<double> linear(static_cast<std::size_t>(kChannels) * f * f * latent_dim);
  for (auto& w : linear) w = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(latent_dim)));
  std::vector<double> kernel(3 * kChannels * 9);
  for (auto& w : kernel) w = rng.normal(0.0, kGain / std::sqrt(9.0 * kChannels));
  bias_.resize(3);
  for (auto& b : bias_) b = rng.normal(0.0, 0.1);

  const std::size_t out_size = 3 * static_cast<std::size_t>(r) * r;
  matrix_.assign(out_size * latent_dim, 0.0);
  std::vector<double> feat(static_cast<std::size_t>(kChannels) * f * f);
  for (int j = 0; j < latent_dim; ++j) {
    for (std::size_t i = 0; i < feat.size(); ++i) feat[i] = linear[i * latent_dim + j];
    for (int oc = 0; oc < 3; ++oc) {
      for (int y = 0; y < r; ++y) {
        for (int x = 0; x < r; ++x) {
          double acc = 0.0;
          for (int ic = 0; ic < kChannels; ++ic) {
            for (int ky = -1; ky <= 1; ++ky) {
              const int yy = y + ky;
              if (yy < 0 || yy >= r) continue;
              for (int kx = -1; kx <= 1; ++kx) {
                const int xx = x + kx;
                if (xx < 0 || xx >= r) continue;
                // nearest-neighbour upsampling by 4
                const double v = feat[(static_cast<std::size_t>(ic) * f + yy / 4) * f + xx / 4];
                acc += kernel[((oc * kChannels + ic) * 3 + (ky + 1)) * 3 + (kx + 1)] * v;
              }
            }
          }
          matrix_[((static_cast<std::size_t>(oc) * r + y) * r + x) * latent_dim + j] = acc;
        }
      }
    }
  }
}

std::string ToyGenerator::name() const { return fmt::format("toy:{}", seed_); }

std::vector<double> ToyGenerator::preactivation(std::span<const double> latent) const {
  if (latent.size() != static_cast<std::size_t>(latent_dim_)) {
    throw Error(fmt::format("latent has {} entries, generator expects {}", latent.size(), latent_dim_));
  }
  const std::size_t plane = static_cast<std::size_t>(resolution_) * resolution_;
  std::vector<double> pre(3 * plane);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double* row = &matrix_[i * latent_dim_];
    double acc = bias_[i / plane];
    for (int j = 0; j < latent_dim_; ++j) acc += row[j] * latent[j];
    pre[i] = acc;
  }
  return pre;
}

std::vector<double> ToyGenerator::generate(std::span<const double> latent) const {
  auto out = preactivation(latent);
  for (auto& v : out) v = 0.5 * (1.0 + std::tanh(v));
  return out;
}

std::vector<double> ToyGenerator::vjp(std::span<const double> latent, std::span<const double> grad_image) const {
  const auto pre = preactivation(latent);
  if (grad_image.size() != pre.size()) throw Error("gradient size does not match generator output");
  std::vector<double> grad(latent_dim_, 0.0);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double t = std::tanh(pre[i]);
    const double g = grad_image[i] * 0.5 * (1.0 - t * t);
    if (g == 0.0) continue;
    const double* row = &matrix_[i * latent_dim_];
    for (int j = 0; j < latent_dim_; ++j) grad[j] += g * row[j];
  }
  return grad;
}

std::unique_ptr<GeneratorAdapter> make_generator(std::string_view spec) {
  const std::string s = trim(spec);
  if (s == "toy") return std::make_unique<ToyGenerator>();
  if (s.starts_with("toy:")) {
    try {
      return std::make_unique<ToyGenerator>(std::stoull(s.substr(4)));
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("bad toy generator seed in '{}'", s));
    }
  }
  if (!s.empty() && fs::is_regular_file(s)) return make_generator(read_file_text(s));
  throw ConfigError(fmt::format("unknown generator '{}'", s));
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw Error("mean_squared_error needs equal, nonempty inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double MsePerceptualDistance::distance(std::span<const double> a, std::span<const double> b, int,
                                       std::vector<double>* grad_a) const {
  if (grad_a) {
    grad_a->resize(a.size());
    const double scale = 2.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) (*grad_a)[i] = scale * (a[i] - b[i]);
  }
  return mean_squared_error(a, b);
}

void InversionConfig::validate() const {
  if (steps <= 0) throw ConfigError("inversion steps must be positive");
  if (!(initial_lr > 0.0)) throw ConfigError("inversion initial_lr must be positive");
  if (!(lr_rampup > 0.0) || !(lr_rampdown > 0.0) || !(noise_ramp > 0.0)) {
    throw ConfigError("inversion ramp lengths must be positive");
  }
  if (initial_noise_factor < 0.0) throw ConfigError("initial_noise_factor must be non-negative");
}

InversionResult invert(std::string image_id, const cv::Mat& image, const GeneratorAdapter& generator,
                       const PerceptualDistance& perceptual, const InversionConfig& config) {
  config.validate();
  if (!generator.differentiable()) {
    throw Error(fmt::format("generator '{}' is not differentiable; inversion needs gradients", generator.name()));
  }
  const int res = generator.resolution();
  const auto target = to_planar(image, res);
  const std::size_t d = static_cast<std::size_t>(generator.latent_dim());

  InversionResult result;
  result.image_id = std::move(image_id);
  result.generator = generator.name();
  result.perceptual = perceptual.name();

  std::vector<double> z(d, 0.0), m(d, 0.0), v(d, 0.0), noisy(d);
  std::vector<double> best_z = z;
  double best = std::numeric_limits<double>::infinity();
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Rng rng(config.seed);

  auto consider = [&](const std::vector<double>& latent) {
    const double loss = perceptual.distance(generator.generate(latent), target, res, nullptr);
    if (!std::isfinite(loss)) return false;
    if (loss < best) {
      best = loss;
      best_z = latent;
    }
    return true;
  };

  int performed = 0;
  for (int step = 0; step < config.steps; ++step) {
    const double t = static_cast<double>(step) / config.steps;
    const double noise_decay = std::max(0.0, 1.0 - t / config.noise_ramp);
    const double noise = generator.latent_std() * config.initial_noise_factor * noise_decay * noise_decay;
    double ramp = std::min(1.0, (1.0 - t) / config.lr_rampdown);
    ramp = 0.5 - 0.5 * std::cos(ramp * std::numbers::pi);
    ramp *= std::min(1.0, t / config.lr_rampup);
    const double lr = config.initial_lr * ramp;

    if (!consider(z)) {
      result.diverged = true;
      break;
    }
    for (std::size_t i = 0; i < d; ++i) noisy[i] = z[i] + noise * rng.normal();
    std::vector<double> grad_x;
    const double loss = perceptual.distance(generator.generate(noisy), target, res, &grad_x);
    if (!std::isfinite(loss)) {
      result.diverged = true;
      break;
    }
    const auto g = generator.vjp(noisy, grad_x);
    const double bc1 = 1.0 - std::pow(kBeta1, step + 1);
    const double bc2 = 1.0 - std::pow(kBeta2, step + 1);
    for (std::size_t i = 0; i < d; ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      z[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
    }
    performed = step + 1;
  }
  if (!result.diverged && !consider(z)) result.diverged = true;

  const auto recon = generator.generate(best_z);
  result.latent = best_z;
  result.steps = performed;
  result.lpips = best;
  result.mse = mean_squared_error(recon, target);
  result.reconstruction = from_planar(recon, res);
  return result;
}

cv::Mat composite(const cv::Mat& original, const InversionResult& result) {
  if (original.empty() || original.type() != CV_8UC3) throw Error("composite expects a BGR 8-bit original");
  cv::Mat panel = original;
  if (panel.cols < kCompositeMinPanelWidth) {
    const int hh = std::max(1, static_cast<int>(std::lround(1.0 * panel.rows * kCompositeMinPanelWidth / panel.cols)));
    panel = resize_bilinear(panel, kCompositeMinPanelWidth, hh);
  }
  const int w = panel.cols;
  const int h = panel.rows;
  cv::Mat canvas(h + kCompositeCaptionHeight, 2 * w, CV_8UC3, cv::Scalar(255, 255, 255));
  panel.copyTo(canvas(cv::Rect(0, 0, w, h)));
  if (!result.reconstruction.empty()) {
    resize_bilinear(result.reconstruction, w, h).copyTo(canvas(cv::Rect(w, 0, w, h)));
  }
  const std::string caption = fmt::format("LPIPS {:.4f}   MSE {:.6f}", result.lpips, result.mse);
  cv::putText(canvas, caption, cv::Point(8, h + 27), cv::FONT_HERSHEY_SIMPLEX, 0.6, cv::Scalar(0, 0, 0), 1,
              cv::LINE_8);
  return canvas;
}

std::string inversion_to_json(const InversionResult& result) {
  json j{{"image_id", result.image_id}, {"latent", result.latent}, {"lpips", result.lpips},
         {"mse", result.mse},           {"steps", result.steps},   {"diverged", result.diverged},
         {"generator", result.generator}, {"perceptual", result.perceptual}};
  return j.dump() + "\n";
}

InversionResult inversion_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    InversionResult r;
    r.image_id = j.at("image_id").get<std::string>();
    r.latent = j.at("latent").get<std::vector<double>>();
    r.lpips = j.at("lpips").get<double>();
    r.mse = j.at("mse").get<double>();
    r.steps = j.at("steps").get<int>();
    r.diverged = j.value("diverged", false);
    r.generator = j.value("generator", std::string());
    r.perceptual = j.value("perceptual", std::string());
    return r;
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed inversion record: {}", e.what()));
  }
}

void save_inversion(const fs::path& directory, const InversionResult& result, const cv::Mat& original) {
  fs::create_directories(directory);
  write_file_atomic(directory / (result.image_id + ".json"), inversion_to_json(result));
  write_file_atomic(directory / (result.image_id + "_sbs.jpg"), encode_jpeg(composite(original, result), 90));
}

}  // namespace ganwild
