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

#include "ganwild/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <Eigen/Core>
#include <fmt/format.h>

namespace ganwild::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

int out_dim(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

void im2col(const float* x, int c, int h, int w, int k, int stride, int pad, int ho, int wo, float* col) {
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = col + static_cast<std::size_t>((ci * k + ky) * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          float* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0f);
            continue;
          }
          const float* src = x + (static_cast<std::size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* col, int c, int h, int w, int k, int stride, int pad, int ho, int wo, float* x) {
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row = col + static_cast<std::size_t>((ci * k + ky) * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          float* dst = x + (static_cast<std::size_t>(ci) * h + iy) * w;
          const float* src = row + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

Parameter make_param(std::string name, std::size_t n) {
  Parameter p;
  p.name = std::move(name);
  p.value.assign(n, 0.0f);
  p.grad.assign(n, 0.0f);
  return p;
}

constexpr char kMagic[4] = {'G', 'W', 'N', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

std::map<std::string, std::vector<float>> read_weight_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open weights '{}'", path.string()));
  char magic[4];
  std::uint32_t version = 0, count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kFormatVersion) {
    throw Error(fmt::format("'{}' is not a ganwild weight file", path.string()));
  }
  std::map<std::string, std::vector<float>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    std::vector<float> values(n);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw Error(fmt::format("truncated weight file '{}'", path.string()));
    tensors.emplace(std::move(name), std::move(values));
  }
  return tensors;
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding, bool bias,
               Rng& rng)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding), has_bias_(bias) {
  weight_ = make_param(name + ".weight", static_cast<std::size_t>(out_) * in_ * k_ * k_);
  // He-normal initialization.
  const double std_dev = std::sqrt(2.0 / (static_cast<double>(in_) * k_ * k_));
  for (auto& v : weight_.value) v = static_cast<float>(rng.normal() * std_dev);
  if (has_bias_) bias_ = make_param(name + ".bias", static_cast<std::size_t>(out_));
}

Tensor Conv2d::forward(const Tensor& x, bool training) {
  if (x.shape.c != in_) throw Error(fmt::format("conv expects {} channels, got {}", in_, x.shape.c));
  const int ho = out_dim(x.shape.h, k_, stride_, pad_);
  const int wo = out_dim(x.shape.w, k_, stride_, pad_);
  Tensor y({x.shape.n, out_, ho, wo});
  const int kdim = in_ * k_ * k_;
  std::vector<float> col(static_cast<std::size_t>(kdim) * ho * wo);
  const ConstMapMat w(weight_.value.data(), out_, kdim);
  for (int i = 0; i < x.shape.n; ++i) {
    im2col(x.sample(i), in_, x.shape.h, x.shape.w, k_, stride_, pad_, ho, wo, col.data());
    MapMat out(y.sample(i), out_, ho * wo);
    out.noalias() = w * ConstMapMat(col.data(), kdim, ho * wo);
    if (has_bias_) {
      for (int o = 0; o < out_; ++o) out.row(o).array() += bias_.value[o];
    }
  }
  if (training) input_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  const int ho = grad_out.shape.h, wo = grad_out.shape.w;
  const int kdim = in_ * k_ * k_;
  Tensor dx(x.shape);
  std::vector<float> col(static_cast<std::size_t>(kdim) * ho * wo);
  std::vector<float> dcol(col.size());
  const ConstMapMat w(weight_.value.data(), out_, kdim);
  MapMat dw(weight_.grad.data(), out_, kdim);
  for (int i = 0; i < x.shape.n; ++i) {
    const ConstMapMat dy(grad_out.sample(i), out_, ho * wo);
    im2col(x.sample(i), in_, x.shape.h, x.shape.w, k_, stride_, pad_, ho, wo, col.data());
    dw.noalias() += dy * ConstMapMat(col.data(), kdim, ho * wo).transpose();
    MapMat(dcol.data(), kdim, ho * wo).noalias() = w.transpose() * dy;
    col2im(dcol.data(), in_, x.shape.h, x.shape.w, k_, stride_, pad_, ho, wo, dx.sample(i));
    if (has_bias_) {
      for (int o = 0; o < out_; ++o) bias_.grad[o] += dy.row(o).sum();
    }
  }
  return dx;
}

void Conv2d::collect(std::vector<Parameter*>& params, std::vector<Buffer*>&) {
  params.push_back(&weight_);
  if (has_bias_) params.push_back(&bias_);
}

BatchNorm2d::BatchNorm2d(std::string name, int channels, float momentum, float eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = make_param(name + ".gamma", static_cast<std::size_t>(channels));
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
  beta_ = make_param(name + ".beta", static_cast<std::size_t>(channels));
  running_mean_ = {name + ".running_mean", std::vector<float>(static_cast<std::size_t>(channels), 0.0f)};
  running_var_ = {name + ".running_var", std::vector<float>(static_cast<std::size_t>(channels), 1.0f)};
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  const int n = x.shape.n, hw = x.shape.h * x.shape.w;
  Tensor y(x.shape);
  inv_std_.assign(static_cast<std::size_t>(channels_), 0.0f);
  if (training) normalized_ = Tensor(x.shape);
  last_training_ = training;
  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (training) {
      double sum = 0.0, sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const float* p = x.sample(i) + static_cast<std::size_t>(c) * hw;
        for (int j = 0; j < hw; ++j) sum += p[j];
      }
      const double m = static_cast<double>(n) * hw;
      mean = sum / m;
      for (int i = 0; i < n; ++i) {
        const float* p = x.sample(i) + static_cast<std::size_t>(c) * hw;
        for (int j = 0; j < hw; ++j) sq += (p[j] - mean) * (p[j] - mean);
      }
      var = sq / m;
      const double unbiased = m > 1 ? sq / (m - 1) : var;
      running_mean_.value[c] = static_cast<float>((1 - momentum_) * running_mean_.value[c] + momentum_ * mean);
      running_var_.value[c] = static_cast<float>((1 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
    } else {
      mean = running_mean_.value[c];
      var = running_var_.value[c];
    }
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
    inv_std_[c] = inv;
    const float g = gamma_.value[c], b = beta_.value[c];
    const float fm = static_cast<float>(mean);
    for (int i = 0; i < n; ++i) {
      const float* p = x.sample(i) + static_cast<std::size_t>(c) * hw;
      float* q = y.sample(i) + static_cast<std::size_t>(c) * hw;
      float* xn = training ? normalized_.sample(i) + static_cast<std::size_t>(c) * hw : nullptr;
      for (int j = 0; j < hw; ++j) {
        const float h = (p[j] - fm) * inv;
        if (xn) xn[j] = h;
        q[j] = g * h + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  const int n = grad_out.shape.n, hw = grad_out.shape.h * grad_out.shape.w;
  const double m = static_cast<double>(n) * hw;
  Tensor dx(grad_out.shape);
  for (int c = 0; c < channels_; ++c) {
    double dgamma = 0.0, dbeta = 0.0;
    for (int i = 0; i < n; ++i) {
      const float* dy = grad_out.sample(i) + static_cast<std::size_t>(c) * hw;
      const float* xn = normalized_.sample(i) + static_cast<std::size_t>(c) * hw;
      for (int j = 0; j < hw; ++j) {
        dgamma += dy[j] * xn[j];
        dbeta += dy[j];
      }
    }
    gamma_.grad[c] += static_cast<float>(dgamma);
    beta_.grad[c] += static_cast<float>(dbeta);
    const double scale = gamma_.value[c] * inv_std_[c] / m;
    for (int i = 0; i < n; ++i) {
      const float* dy = grad_out.sample(i) + static_cast<std::size_t>(c) * hw;
      const float* xn = normalized_.sample(i) + static_cast<std::size_t>(c) * hw;
      float* d = dx.sample(i) + static_cast<std::size_t>(c) * hw;
      for (int j = 0; j < hw; ++j) d[j] = static_cast<float>(scale * (m * dy[j] - dbeta - xn[j] * dgamma));
    }
  }
  return dx;
}

void BatchNorm2d::collect(std::vector<Parameter*>& params, std::vector<Buffer*>& buffers) {
  params.push_back(&gamma_);
  params.push_back(&beta_);
  buffers.push_back(&running_mean_);
  buffers.push_back(&running_var_);
}

Tensor ReLU::forward(const Tensor& x, bool training) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
  if (training) output_ = y;
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor dx(grad_out.shape);
  for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = output_.data[i] > 0.0f ? grad_out.data[i] : 0.0f;
  return dx;
}

BasicBlock::BasicBlock(const std::string& name, int in_channels, int out_channels, int stride, Rng& rng)
    : conv1_(name + ".conv1", in_channels, out_channels, 3, stride, 1, false, rng),
      bn1_(name + ".bn1", out_channels),
      conv2_(name + ".conv2", out_channels, out_channels, 3, 1, 1, false, rng),
      bn2_(name + ".bn2", out_channels) {
  if (stride != 1 || in_channels != out_channels) {
    down_conv_ = std::make_unique<Conv2d>(name + ".down", in_channels, out_channels, 1, stride, 0, false, rng);
    down_bn_ = std::make_unique<BatchNorm2d>(name + ".down_bn", out_channels);
  }
}

Tensor BasicBlock::forward(const Tensor& x, bool training) {
  Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(x, training), training), training);
  Tensor y = bn2_.forward(conv2_.forward(h, training), training);
  const Tensor shortcut = down_conv_ ? down_bn_->forward(down_conv_->forward(x, training), training) : x;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const float v = y.data[i] + shortcut.data[i];
    y.data[i] = v > 0.0f ? v : 0.0f;
  }
  if (training) out_ = y;
  return y;
}

Tensor BasicBlock::backward(const Tensor& grad_out) {
  Tensor g(grad_out.shape);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = out_.data[i] > 0.0f ? grad_out.data[i] : 0.0f;
  Tensor dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(g)))));
  if (down_conv_) {
    const Tensor ds = down_conv_->backward(down_bn_->backward(g));
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
  } else {
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i];
  }
  return dx;
}

void BasicBlock::collect(std::vector<Parameter*>& params, std::vector<Buffer*>& buffers) {
  conv1_.collect(params, buffers);
  bn1_.collect(params, buffers);
  conv2_.collect(params, buffers);
  bn2_.collect(params, buffers);
  if (down_conv_) {
    down_conv_->collect(params, buffers);
    down_bn_->collect(params, buffers);
  }
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool training) {
  (void)training;
  in_shape_ = x.shape;
  Tensor y({x.shape.n, x.shape.c, 1, 1});
  const int hw = x.shape.h * x.shape.w;
  for (int i = 0; i < x.shape.n; ++i) {
    for (int c = 0; c < x.shape.c; ++c) {
      const float* p = x.sample(i) + static_cast<std::size_t>(c) * hw;
      double s = 0.0;
      for (int j = 0; j < hw; ++j) s += p[j];
      y.at(i, c, 0, 0) = static_cast<float>(s / hw);
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  const int hw = in_shape_.h * in_shape_.w;
  for (int i = 0; i < in_shape_.n; ++i) {
    for (int c = 0; c < in_shape_.c; ++c) {
      const float g = grad_out.at(i, c, 0, 0) / static_cast<float>(hw);
      float* p = dx.sample(i) + static_cast<std::size_t>(c) * hw;
      std::fill(p, p + hw, g);
    }
  }
  return dx;
}

Linear::Linear(std::string name, int in_features, int out_features, Rng& rng) : in_(in_features), out_(out_features) {
  weight_ = make_param(name + ".weight", static_cast<std::size_t>(in_) * out_);
  bias_ = make_param(name + ".bias", static_cast<std::size_t>(out_));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  for (auto& v : weight_.value) v = static_cast<float>(rng.uniform(-bound, bound));
  for (auto& v : bias_.value) v = static_cast<float>(rng.uniform(-bound, bound));
}

Tensor Linear::forward(const Tensor& x, bool training) {
  if (static_cast<int>(x.shape.sample_size()) != in_) throw Error("linear layer input size mismatch");
  Tensor y({x.shape.n, out_, 1, 1});
  const ConstMapMat w(weight_.value.data(), out_, in_);
  const ConstMapMat in(x.data.data(), x.shape.n, in_);
  MapMat out(y.data.data(), x.shape.n, out_);
  out.noalias() = in * w.transpose();
  for (int i = 0; i < x.shape.n; ++i) {
    for (int o = 0; o < out_; ++o) out(i, o) += bias_.value[o];
  }
  if (training) input_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int n = input_.shape.n;
  const ConstMapMat dy(grad_out.data.data(), n, out_);
  const ConstMapMat in(input_.data.data(), n, in_);
  MapMat(weight_.grad.data(), out_, in_).noalias() += dy.transpose() * in;
  for (int o = 0; o < out_; ++o) bias_.grad[o] += dy.col(o).sum();
  Tensor dx(input_.shape);
  MapMat(dx.data.data(), n, in_).noalias() = dy * ConstMapMat(weight_.value.data(), out_, in_);
  return dx;
}

void Linear::collect(std::vector<Parameter*>& params, std::vector<Buffer*>&) {
  params.push_back(&weight_);
  params.push_back(&bias_);
}

ResNetClassifier::ResNetClassifier(const BackboneConfig& config, std::uint64_t seed) : config_(config) {
  if (config.stages.empty()) throw ConfigError("backbone needs at least one stage");
  Rng rng(seed);
  layers_.push_back(std::make_unique<Conv2d>("stem.conv", config.in_channels, config.stem_channels,
                                             config.stem_kernel, config.stem_stride, config.stem_kernel / 2, false,
                                             rng));
  layers_.push_back(std::make_unique<BatchNorm2d>("stem.bn", config.stem_channels));
  layers_.push_back(std::make_unique<ReLU>());
  int channels = config.stem_channels;
  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    const auto& stage = config.stages[s];
    for (int b = 0; b < stage.blocks; ++b) {
      layers_.push_back(std::make_unique<BasicBlock>(fmt::format("stage{}.block{}", s, b), channels, stage.channels,
                                                     b == 0 ? stage.stride : 1, rng));
      channels = stage.channels;
    }
  }
  layers_.push_back(std::make_unique<GlobalAvgPool>());
  layers_.push_back(std::make_unique<Linear>("head", channels, 1, rng));
}

Tensor ResNetClassifier::forward(const Tensor& images, bool training) {
  Tensor x = layers_.front()->forward(images, training);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->forward(x, training);
  return x;
}

void ResNetClassifier::backward(const Tensor& grad_logits) {
  Tensor g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<Parameter*> ResNetClassifier::parameters() {
  std::vector<Parameter*> params;
  std::vector<Buffer*> buffers;
  for (auto& l : layers_) l->collect(params, buffers);
  return params;
}

std::vector<Buffer*> ResNetClassifier::buffers() {
  std::vector<Parameter*> params;
  std::vector<Buffer*> buffers;
  for (auto& l : layers_) l->collect(params, buffers);
  return buffers;
}

void ResNetClassifier::zero_grad() {
  for (auto* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

void ResNetClassifier::save(const fs::path& path) {
  std::vector<std::pair<const std::string*, const std::vector<float>*>> tensors;
  for (auto* p : parameters()) tensors.emplace_back(&p->name, &p->value);
  for (auto* b : buffers()) tensors.emplace_back(&b->name, &b->value);
  std::vector<std::uint8_t> bytes;
  auto append = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  };
  append(kMagic, 4);
  append(&kFormatVersion, sizeof kFormatVersion);
  const auto count = static_cast<std::uint32_t>(tensors.size());
  append(&count, sizeof count);
  for (const auto& [name, values] : tensors) {
    const auto len = static_cast<std::uint32_t>(name->size());
    append(&len, sizeof len);
    append(name->data(), name->size());
    const std::uint64_t n = values->size();
    append(&n, sizeof n);
    append(values->data(), n * sizeof(float));
  }
  write_file_atomic(path, bytes);
}

void ResNetClassifier::load(const fs::path& path) {
  const auto tensors = read_weight_file(path);
  auto assign = [&](const std::string& name, std::vector<float>& dst) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(fmt::format("weights '{}' lack tensor {}", path.string(), name));
    if (it->second.size() != dst.size()) throw Error(fmt::format("tensor {} has wrong size in '{}'", name, path.string()));
    dst = it->second;
  };
  for (auto* p : parameters()) assign(p->name, p->value);
  for (auto* b : buffers()) assign(b->name, b->value);
}

std::size_t ResNetClassifier::load_partial(const fs::path& path) {
  const auto tensors = read_weight_file(path);
  std::size_t loaded = 0;
  auto assign = [&](const std::string& name, std::vector<float>& dst) {
    if (name.rfind("head.", 0) == 0) return;
    const auto it = tensors.find(name);
    if (it != tensors.end() && it->second.size() == dst.size()) {
      dst = it->second;
      ++loaded;
    }
  };
  for (auto* p : parameters()) assign(p->name, p->value);
  for (auto* b : buffers()) assign(b->name, b->value);
  return loaded;
}

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::step() {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  const double step = lr_ * std::sqrt(bc2) / bc1;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = static_cast<float>(beta1_ * m[i] + (1 - beta1_) * g);
      v[i] = static_cast<float>(beta2_ * v[i] + (1 - beta2_) * g * g);
      p.value[i] -= static_cast<float>(step * m[i] / (std::sqrt(static_cast<double>(v[i])) + eps_));
    }
  }
}

double bce_with_logits(std::span<const float> logits, std::span<const float> targets, std::vector<float>* grad) {
  if (logits.size() != targets.size() || logits.empty()) throw Error("bce_with_logits: size mismatch");
  const double n = static_cast<double>(logits.size());
  double loss = 0.0;
  if (grad) grad->assign(logits.size(), 0.0f);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], t = targets[i];
    // log(1 + exp(-|z|)) + max(z, 0) - z t
    loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    if (grad) (*grad)[i] = static_cast<float>((sigmoid(z) - t) / n);
  }
  return loss / n;
}

}  // namespace ganwild::nn
