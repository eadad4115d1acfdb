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

// Minimal CPU training stack for the residual image classifier: NCHW float
// tensors, layers with hand-written backward passes, Adam, and a flat
// binary weight format.

#ifndef GANWILD_NN_HPP_
#define GANWILD_NN_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ganwild/common.hpp"

namespace ganwild::nn {

struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f) : shape(s), data(s.size(), fill) {}

  float* sample(int i) { return data.data() + static_cast<std::size_t>(i) * shape.sample_size(); }
  const float* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * shape.sample_size(); }
  float& at(int n, int c, int h, int w) {
    return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + h) * shape.w + w];
  }
  float at(int n, int c, int h, int w) const {
    return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + h) * shape.w + w];
  }
};

struct Parameter {
  std::string name;
  std::vector<float> value;
  std::vector<float> grad;
};

// Non-trainable state saved with the weights (batch-norm running stats).
struct Buffer {
  std::string name;
  std::vector<float> value;
};

class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  // Accumulates parameter gradients and returns the input gradient. Must
  // follow a forward call with training == true.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect(std::vector<Parameter*>& params, std::vector<Buffer*>& buffers) {
    (void)params;
    (void)buffers;
  }
};

class Conv2d final : public Module {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding, bool bias, Rng& rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& params, std::vector<Buffer*>& buffers) override;

  Parameter& weight() { return weight_; }

 private:
  int in_, out_, k_, stride_, pad_;
  bool has_bias_;
  Parameter weight_;  // [out, in, k, k]
  Parameter bias_;
  Tensor input_;
};

class BatchNorm2d final : public Module {
 public:
  BatchNorm2d(std::string name, int channels, float momentum = 0.1f, float eps = 1e-5f);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& params, std::vector<Buffer*>& buffers) override;

 private:
  int channels_;
  float momentum_, eps_;
  Parameter gamma_, beta_;
  Buffer running_mean_, running_var_;
  Tensor normalized_;
  std::vector<float> inv_std_;
  bool last_training_ = false;
};

class ReLU final : public Module {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor output_;
};

// conv3x3-bn-relu-conv3x3-bn plus identity or 1x1-conv projection shortcut.
class BasicBlock final : public Module {
 public:
  BasicBlock(const std::string& name, int in_channels, int out_channels, int stride, Rng& rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& params, std::vector<Buffer*>& buffers) override;

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  ReLU relu1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  std::unique_ptr<Conv2d> down_conv_;
  std::unique_ptr<BatchNorm2d> down_bn_;
  Tensor out_;
};

class GlobalAvgPool final : public Module {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape in_shape_;
};

// Fully connected layer on [n, c, 1, 1] tensors.
class Linear final : public Module {
 public:
  Linear(std::string name, int in_features, int out_features, Rng& rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& params, std::vector<Buffer*>& buffers) override;

 private:
  int in_, out_;
  Parameter weight_, bias_;
  Tensor input_;
};

struct StageConfig {
  int channels = 16;
  int blocks = 1;
  int stride = 1;
  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct BackboneConfig {
  int in_channels = 3;
  int stem_channels = 16;
  int stem_kernel = 3;
  int stem_stride = 1;
  std::vector<StageConfig> stages = {{16, 1, 1}, {32, 1, 2}, {64, 1, 2}};
  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

// Residual backbone with a single-logit head.
class ResNetClassifier {
 public:
  ResNetClassifier(const BackboneConfig& config, std::uint64_t seed);

  // Returns [n, 1, 1, 1] logits.
  Tensor forward(const Tensor& images, bool training);
  void backward(const Tensor& grad_logits);

  std::vector<Parameter*> parameters();
  std::vector<Buffer*> buffers();
  void zero_grad();

  void save(const fs::path& path);
  void load(const fs::path& path);
  // Loads every tensor whose name and size match and leaves the rest (the
  // head, typically) at their fresh initialization. Returns the count loaded.
  std::size_t load_partial(const fs::path& path);

  const BackboneConfig& config() const { return config_; }

 private:
  BackboneConfig config_;
  std::vector<std::unique_ptr<Module>> layers_;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<std::vector<float>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long step_count_ = 0;
};

// Mean binary cross-entropy of sigmoid(logits) against {0, 1} targets.
// Writes d(loss)/d(logit) into grad when non-null.
double bce_with_logits(std::span<const float> logits, std::span<const float> targets, std::vector<float>* grad);

inline double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace ganwild::nn

#endif  // GANWILD_NN_HPP_
