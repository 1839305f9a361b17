// Copyright 2026 The BiUDA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "networks.hpp"

#include <bit>

#include "errors.hpp"

namespace biuda {
namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

nn::Conv2d conv(int in, int out, int kernel, int stride, int padding, bool bias = true) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias));
}

int log2_exact(int v) { return std::countr_zero(static_cast<unsigned>(v)); }

}  // namespace

void NetworkConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(image_size, "image_size");
  positive(base_channels, "base_channels");
  positive(content_stride, "content_stride");
  positive(pattern_dim, "pattern_dim");
  positive(generator_blocks, "generator_blocks");
  positive(mapper_hidden, "mapper_hidden");
  positive(pattern_units, "pattern_units");
  positive(discriminator_units, "discriminator_units");
  if (content_channels < 0) throw ConfigError("content_channels must be non-negative");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (!std::has_single_bit(static_cast<unsigned>(content_stride)) || content_stride < 2) {
    throw ConfigError("content_stride must be a power of two >= 2");
  }
  if (image_size % content_stride != 0) throw ConfigError("content_stride must divide image_size");
  if (resolved_content_channels() % 4 != 0) throw ConfigError("content channels must be a multiple of 4");
  if ((image_size >> discriminator_units) < 1 || image_size % (1 << discriminator_units) != 0) {
    throw ConfigError("image_size must be divisible by 2^discriminator_units");
  }
  if (pyramid_scales.empty()) throw ConfigError("pyramid_scales must not be empty");
  for (int s : pyramid_scales) positive(s, "pyramid scale");
}

torch::Tensor adain(const torch::Tensor& feature, const torch::Tensor& scale, const torch::Tensor& shift,
                    double eps) {
  if (feature.dim() == 3) return adain(feature.unsqueeze(0), scale.unsqueeze(0), shift.unsqueeze(0), eps).squeeze(0);
  if (feature.dim() != 4 || scale.sizes() != shift.sizes() || scale.dim() != 2 || scale.size(0) != feature.size(0) ||
      scale.size(1) != feature.size(1)) {
    throw ShapeError("adain expects feature [B,C,h,w] with scale/shift [B,C]");
  }
  const auto mean = feature.mean({2, 3}, /*keepdim=*/true);
  const auto var = (feature - mean).pow(2).mean({2, 3}, /*keepdim=*/true);
  const auto normalized = (feature - mean) / torch::sqrt(var + eps);
  return normalized * scale.unsqueeze(-1).unsqueeze(-1) + shift.unsqueeze(-1).unsqueeze(-1);
}

// ---------------------------------------------------------------------------

ResidualDownImpl::ResidualDownImpl(int in_channels, int out_channels) {
  conv1_ = register_module("conv1", conv(in_channels, out_channels, 3, 2, 1, false));
  bn1_ = register_module("bn1", nn::BatchNorm2d(out_channels));
  conv2_ = register_module("conv2", conv(out_channels, out_channels, 3, 1, 1, false));
  bn2_ = register_module("bn2", nn::BatchNorm2d(out_channels));
  skip_ = register_module("skip", conv(in_channels, out_channels, 1, 2, 0, false));
  bn_skip_ = register_module("bn_skip", nn::BatchNorm2d(out_channels));
}

torch::Tensor ResidualDownImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(bn1_(conv1_(x)));
  y = bn2_(conv2_(y));
  return torch::relu(y + bn_skip_(skip_(x)));
}

PyramidPoolingImpl::PyramidPoolingImpl(int in_channels, int out_channels, std::vector<int> scales)
    : scales_(std::move(scales)) {
  const int branch_channels = in_channels / 4;
  for (std::size_t i = 0; i < scales_.size(); ++i) {
    branches_->push_back(nn::Sequential(conv(in_channels, branch_channels, 1, 1, 0, false),
                                        nn::BatchNorm2d(branch_channels), nn::ReLU()));
  }
  register_module("branches", branches_);
  const int fused_in = in_channels + static_cast<int>(scales_.size()) * branch_channels;
  fuse_ = register_module("fuse", nn::Sequential(conv(fused_in, out_channels, 3, 1, 1, false),
                                                 nn::BatchNorm2d(out_channels), nn::ReLU()));
}

torch::Tensor PyramidPoolingImpl::forward(const torch::Tensor& x) {
  const std::vector<int64_t> size{x.size(2), x.size(3)};
  std::vector<torch::Tensor> parts{x};
  for (std::size_t i = 0; i < scales_.size(); ++i) {
    auto pooled = F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions(scales_[i]));
    auto projected = branches_[i]->as<nn::Sequential>()->forward(pooled);
    parts.push_back(F::interpolate(
        projected, F::InterpolateFuncOptions().size(size).mode(torch::kBilinear).align_corners(false)));
  }
  return fuse_->forward(torch::cat(parts, 1));
}

ContentEncoderImpl::ContentEncoderImpl(const NetworkConfig& cfg) {
  const int b = cfg.base_channels;
  const int cc = cfg.resolved_content_channels();
  stem_ = register_module("stem", nn::Sequential(conv(1, b, 3, 1, 1, false), nn::BatchNorm2d(b), nn::ReLU()));
  int channels = b;
  for (int i = 0; i < log2_exact(cfg.content_stride); ++i) {
    const int next = std::min(b << (i + 1), cc);
    trunk_->push_back(ResidualDown(channels, next));
    channels = next;
  }
  register_module("trunk", trunk_);
  pyramid_ = register_module("pyramid", PyramidPooling(channels, cc, cfg.pyramid_scales));
}

torch::Tensor ContentEncoderImpl::forward(const torch::Tensor& x) {
  auto y = stem_->forward(x);
  for (auto& unit : *trunk_) y = unit->as<ResidualDown>()->forward(y);
  return pyramid_->forward(y);
}

PatternEncoderImpl::PatternEncoderImpl(const NetworkConfig& cfg, bool domain_aware)
    : domain_aware_(domain_aware), injection_(cfg.domain_injection) {
  const int b = cfg.base_channels;
  int channels = domain_aware_ && injection_ == DomainInjection::kInputChannel ? 2 : 1;
  body_ = nn::Sequential();
  for (int i = 0; i < cfg.pattern_units; ++i) {
    const int next = b * std::min(1 << i, 4);
    body_->push_back(conv(channels, next, 4, 2, 1, false));
    body_->push_back(nn::BatchNorm2d(next));
    body_->push_back(nn::ReLU());
    channels = next;
  }
  register_module("body", body_);
  head_ = register_module("head", conv(channels, cfg.pattern_dim, 1, 1, 0));
  if (domain_aware_ && injection_ == DomainInjection::kEmbedding) {
    embedding_ = register_parameter("embedding", torch::zeros({2, channels}));
    torch::nn::init::normal_(embedding_, 0.0, 1.0);
  }
}

torch::Tensor PatternEncoderImpl::forward(const torch::Tensor& x, const torch::Tensor& domains) {
  auto input = x;
  if (domain_aware_ && injection_ == DomainInjection::kInputChannel) {
    auto channel = domains.to(x.dtype()).view({-1, 1, 1, 1}).expand({x.size(0), 1, x.size(2), x.size(3)});
    input = torch::cat({x, channel}, 1);
  }
  auto pooled = F::adaptive_avg_pool2d(body_->forward(input), F::AdaptiveAvgPool2dFuncOptions(1));
  if (domain_aware_ && injection_ == DomainInjection::kEmbedding) {
    pooled = pooled + embedding_.index_select(0, domains.to(torch::kLong)).unsqueeze(-1).unsqueeze(-1);
  }
  return head_(pooled).flatten(1);
}

GeneratorImpl::GeneratorImpl(const NetworkConfig& cfg)
    : blocks_(cfg.generator_blocks), channels_(cfg.resolved_content_channels()) {
  mapper_ = register_module("mapper", nn::Sequential(nn::Linear(cfg.pattern_dim, cfg.mapper_hidden), nn::ReLU(),
                                                     nn::Linear(cfg.mapper_hidden, blocks_ * 4 * channels_)));
  for (int i = 0; i < 2 * blocks_; ++i) block_convs_->push_back(conv(channels_, channels_, 3, 1, 1));
  register_module("blocks", block_convs_);
  upsample_ = nn::Sequential();
  int channels = channels_;
  for (int i = 0; i < log2_exact(cfg.content_stride); ++i) {
    const int next = std::max(channels / 2, cfg.base_channels);
    upsample_->push_back(nn::Upsample(nn::UpsampleOptions().scale_factor(std::vector<double>{2, 2}).mode(torch::kNearest)));
    upsample_->push_back(conv(channels, next, 3, 1, 1));
    upsample_->push_back(nn::ReLU());
    channels = next;
  }
  register_module("upsample", upsample_);
  out_ = register_module("out", conv(channels, 1, 3, 1, 1));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& content, const torch::Tensor& pattern) {
  // Mapper output per block: scale1, shift1, scale2, shift2 (scales as offsets from 1).
  const auto affine = mapper_->forward(pattern).view({pattern.size(0), blocks_, 4, channels_});
  auto y = content;
  for (int i = 0; i < blocks_; ++i) {
    auto z = block_convs_[2 * i]->as<nn::Conv2d>()->forward(y);
    z = torch::relu(adain(z, 1.0 + affine.select(1, i).select(1, 0), affine.select(1, i).select(1, 1)));
    z = block_convs_[2 * i + 1]->as<nn::Conv2d>()->forward(z);
    z = adain(z, 1.0 + affine.select(1, i).select(1, 2), affine.select(1, i).select(1, 3));
    y = y + z;
  }
  return torch::sigmoid(out_(upsample_->forward(y)));
}

DiscriminatorImpl::DiscriminatorImpl(const NetworkConfig& cfg) {
  body_ = nn::Sequential();
  int channels = 1;
  for (int i = 0; i < cfg.discriminator_units; ++i) {
    const int next = cfg.base_channels * std::min(1 << i, 8);
    body_->push_back(conv(channels, next, 4, 2, 1));
    if (i + 1 < cfg.discriminator_units) body_->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(next).eps(1e-5)));
    body_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    channels = next;
  }
  register_module("body", body_);
  head_ = register_module("head", conv(channels, 1, 1, 1, 0));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) { return torch::sigmoid(head_(body_->forward(x))); }

SegmenterImpl::SegmenterImpl(const NetworkConfig& cfg) {
  body_ = nn::Sequential();
  int channels = cfg.resolved_content_channels();
  for (int i = 0; i < log2_exact(cfg.content_stride); ++i) {
    const int next = std::max(channels / 2, cfg.base_channels);
    body_->push_back(nn::Upsample(
        nn::UpsampleOptions().scale_factor(std::vector<double>{2, 2}).mode(torch::kBilinear).align_corners(false)));
    body_->push_back(conv(channels, next, 3, 1, 1, false));
    body_->push_back(nn::BatchNorm2d(next));
    body_->push_back(nn::ReLU());
    channels = next;
  }
  register_module("body", body_);
  classifier_ = register_module("classifier", conv(channels, cfg.num_classes, 1, 1, 0));
}

torch::Tensor SegmenterImpl::forward(const torch::Tensor& content) {
  return torch::softmax(classifier_(body_->forward(content)), 1);
}

// ---------------------------------------------------------------------------

NetworksImpl::NetworksImpl(const NetworkConfig& cfg, bool inference_only)
    : config_(cfg), inference_only_(inference_only) {
  config_.validate();
  content_encoder = register_module("content_encoder", ContentEncoder(config_));
  segmenter = register_module("segmenter", Segmenter(config_));
  if (inference_only_) return;
  if (config_.unified_pattern_encoder) {
    pattern_encoders.push_back(register_module("pattern_encoder", PatternEncoder(config_, true)));
  } else {
    pattern_encoders.push_back(register_module("pattern_encoder_domain0", PatternEncoder(config_, false)));
    pattern_encoders.push_back(register_module("pattern_encoder_domain1", PatternEncoder(config_, false)));
  }
  generator = register_module("generator", Generator(config_));
  if (config_.shared_discriminator) {
    discriminators.push_back(register_module("discriminator", Discriminator(config_)));
  } else {
    discriminators.push_back(register_module("discriminator_domain0", Discriminator(config_)));
    discriminators.push_back(register_module("discriminator_domain1", Discriminator(config_)));
  }
}

std::vector<torch::Tensor> NetworksImpl::content_parameters() {
  auto params = content_encoder->parameters();
  for (auto& p : segmenter->parameters()) params.push_back(p);
  return params;
}

std::vector<torch::Tensor> NetworksImpl::translation_parameters() {
  std::vector<torch::Tensor> params;
  for (auto& enc : pattern_encoders) {
    for (auto& p : enc->parameters()) params.push_back(p);
  }
  if (generator) {
    for (auto& p : generator->parameters()) params.push_back(p);
  }
  return params;
}

std::vector<torch::Tensor> NetworksImpl::discriminator_parameters() {
  std::vector<torch::Tensor> params;
  for (auto& d : discriminators) {
    for (auto& p : d->parameters()) params.push_back(p);
  }
  return params;
}

PatternEncoder& NetworksImpl::pattern_encoder_for(DomainId d) {
  if (pattern_encoders.empty()) throw ConfigError("pattern encoder is absent from an inference-only model");
  return pattern_encoders.size() == 1 ? pattern_encoders.front() : pattern_encoders[d.value()];
}

Discriminator& NetworksImpl::discriminator_for(DomainId judged_domain) {
  if (discriminators.empty()) throw ConfigError("discriminator is absent from an inference-only model");
  return discriminators.size() == 1 ? discriminators.front() : discriminators[judged_domain.value()];
}

Params init_params(const NetworkConfig& config, std::uint64_t seed, bool inference_only) {
  torch::manual_seed(seed);
  return Networks(config, inference_only);
}

void check_image_batch(const NetworkConfig& config, const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 1 || x.size(2) != config.image_size || x.size(3) != config.image_size) {
    throw ShapeError("expected image batch [B,1," + std::to_string(config.image_size) + "," +
                     std::to_string(config.image_size) + "], got " + c10::str(x.sizes()));
  }
}

ContentCode content_encode(Params& params, const torch::Tensor& x) {
  check_image_batch(params->config(), x);
  return {params->content_encoder->forward(x)};
}

PatternCode pattern_encode(Params& params, const torch::Tensor& x, DomainId d) {
  return pattern_encode(params, x, std::vector<DomainId>(static_cast<std::size_t>(x.size(0)), d));
}

PatternCode pattern_encode(Params& params, const torch::Tensor& x, const std::vector<DomainId>& domains) {
  if (x.dim() != 4 || x.size(1) != 1) throw ShapeError("pattern_encode expects [B,1,H,W], got " + c10::str(x.sizes()));
  if (static_cast<int64_t>(domains.size()) != x.size(0)) throw ShapeError("one domain id per sample required");
  if (params->pattern_encoders.empty()) throw ConfigError("pattern encoder is absent from an inference-only model");
  std::vector<float> ids;
  for (auto d : domains) ids.push_back(static_cast<float>(d.value()));
  auto id_tensor = torch::tensor(ids, torch::TensorOptions().dtype(torch::kFloat32));
  if (params->pattern_encoders.size() == 1) return {params->pattern_encoders.front()->forward(x, id_tensor)};

  // Separate encoders: route each domain's samples through its own network.
  auto out = torch::empty({x.size(0), params->config().pattern_dim}, x.options());
  for (int d = 0; d < 2; ++d) {
    std::vector<int64_t> rows;
    for (std::size_t i = 0; i < domains.size(); ++i) {
      if (domains[i].value() == d) rows.push_back(static_cast<int64_t>(i));
    }
    if (rows.empty()) continue;
    auto index = torch::tensor(rows, torch::kLong);
    auto codes = params->pattern_encoders[d]->forward(x.index_select(0, index), id_tensor.index_select(0, index));
    out = out.index_copy(0, index, codes);
  }
  return {out};
}

torch::Tensor generate(Params& params, const ContentCode& c, const PatternCode& p) {
  if (!params->generator) throw ConfigError("generator is absent from an inference-only model");
  if (c.tensor.size(0) != p.tensor.size(0)) {
    throw ShapeError("content batch " + std::to_string(c.tensor.size(0)) + " vs pattern batch " +
                     std::to_string(p.tensor.size(0)));
  }
  return params->generator->forward(c.tensor, p.tensor);
}

torch::Tensor discriminate(Params& params, const torch::Tensor& x, DomainId judged_domain) {
  check_image_batch(params->config(), x);
  return params->discriminator_for(judged_domain)->forward(x);
}

torch::Tensor segment(Params& params, const ContentCode& c) { return params->segmenter->forward(c.tensor); }

torch::Tensor to_batch(std::span<const Image* const> images) {
  if (images.empty()) throw ShapeError("empty image batch");
  const int h = images.front()->height, w = images.front()->width;
  auto batch = torch::empty({static_cast<int64_t>(images.size()), 1, h, w}, torch::kFloat32);
  auto acc = batch.accessor<float, 4>();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->height != h || images[i]->width != w) throw ShapeError("images in a batch differ in size");
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) acc[i][0][y][x] = images[i]->at(y, x);
    }
  }
  return batch;
}

}  // namespace biuda
