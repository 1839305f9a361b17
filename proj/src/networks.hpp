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

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "dataset.hpp"

namespace biuda {

enum class DomainInjection {
  kInputChannel,  // constant extra input channel valued d
  kEmbedding,     // learned per-domain vector added to the pooled features
};

struct NetworkConfig {
  int image_size = 64;
  int base_channels = 16;
  int content_stride = 4;
  int content_channels = 0;  // 0 selects 4 * base_channels
  int pattern_dim = 8;
  int generator_blocks = 2;
  int mapper_hidden = 64;
  int pattern_units = 4;
  int discriminator_units = 4;
  int num_classes = 5;
  std::vector<int> pyramid_scales{1, 2, 4};
  bool unified_pattern_encoder = true;
  DomainInjection domain_injection = DomainInjection::kInputChannel;
  bool shared_discriminator = false;  // one D per target domain

  int resolved_content_channels() const { return content_channels > 0 ? content_channels : 4 * base_channels; }
  int content_size() const { return image_size / content_stride; }
  int score_map_size() const { return image_size >> discriminator_units; }
  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Spatial content map, batch x C_c x (H/stride) x (W/stride).
struct ContentCode {
  torch::Tensor tensor;
};

/// Appearance vector, batch x P.
struct PatternCode {
  torch::Tensor tensor;
};

/// Per-channel instance normalization followed by an external affine map.
/// feature: [B,]C,h,w; scale/shift: [B,]C. Variance uses stabilizer eps.
torch::Tensor adain(const torch::Tensor& feature, const torch::Tensor& scale, const torch::Tensor& shift,
                    double eps = 1e-5);

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

class ResidualDownImpl : public torch::nn::Module {
 public:
  ResidualDownImpl(int in_channels, int out_channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr}, bn_skip_{nullptr};
};
TORCH_MODULE(ResidualDown);

/// Pools the trunk output at several grid sizes, projects each pooled map,
/// upsamples back and fuses everything with the trunk features.
class PyramidPoolingImpl : public torch::nn::Module {
 public:
  PyramidPoolingImpl(int in_channels, int out_channels, std::vector<int> scales);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  std::vector<int> scales_;
  torch::nn::ModuleList branches_;
  torch::nn::Sequential fuse_{nullptr};
};
TORCH_MODULE(PyramidPooling);

// ---------------------------------------------------------------------------
// The five networks
// ---------------------------------------------------------------------------

/// E_c: residual downsampling trunk plus pyramid pooling. No domain input.
class ContentEncoderImpl : public torch::nn::Module {
 public:
  explicit ContentEncoderImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential stem_{nullptr};
  torch::nn::ModuleList trunk_;
  PyramidPooling pyramid_{nullptr};
};
TORCH_MODULE(ContentEncoder);

/// E_p: stride-2 conv/BN/ReLU units, global average pooling, 1x1 conv.
/// With domain_aware set, the domain controller is injected per
/// cfg.domain_injection; otherwise the encoder serves a single domain.
class PatternEncoderImpl : public torch::nn::Module {
 public:
  PatternEncoderImpl(const NetworkConfig& cfg, bool domain_aware);
  /// domains: float tensor of shape [B] with values in {0, 1}; ignored when
  /// the encoder is not domain aware.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& domains);
  bool domain_aware() const { return domain_aware_; }

 private:
  bool domain_aware_;
  DomainInjection injection_;
  torch::nn::Sequential body_{nullptr};
  torch::nn::Conv2d head_{nullptr};
  torch::Tensor embedding_;
};
TORCH_MODULE(PatternEncoder);

/// G: pattern mapper -> residual AdaIN blocks on the content map ->
/// nearest-neighbour upsampling stages -> logistic output in [0, 1].
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& content, const torch::Tensor& pattern);

 private:
  int blocks_;
  int channels_;
  torch::nn::Sequential mapper_{nullptr};
  torch::nn::ModuleList block_convs_;
  torch::nn::Sequential upsample_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(Generator);

/// D: stride-2 conv/IN/LeakyReLU units and a 1x1 head giving a patch map of
/// probabilities. The last unit skips instance normalization so that the
/// head can still see per-channel means of the final map.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(Discriminator);

/// S: bilinear upsampling + conv/BN/ReLU stages back to input resolution,
/// 1x1 classifier and per-pixel softmax.
class SegmenterImpl : public torch::nn::Module {
 public:
  explicit SegmenterImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& content);

 private:
  torch::nn::Sequential body_{nullptr};
  torch::nn::Conv2d classifier_{nullptr};
};
TORCH_MODULE(Segmenter);

// ---------------------------------------------------------------------------
// Params: every learnable component of one experiment
// ---------------------------------------------------------------------------

class NetworksImpl : public torch::nn::Module {
 public:
  /// inference_only builds E_c and S alone.
  NetworksImpl(const NetworkConfig& cfg, bool inference_only = false);

  const NetworkConfig& config() const { return config_; }
  bool inference_only() const { return inference_only_; }

  ContentEncoder content_encoder{nullptr};
  Segmenter segmenter{nullptr};
  /// One domain-aware encoder, or one encoder per domain.
  std::vector<PatternEncoder> pattern_encoders;
  Generator generator{nullptr};
  /// One shared discriminator, or one per translation target domain.
  std::vector<Discriminator> discriminators;

  /// E_c and S parameters (SGD group).
  std::vector<torch::Tensor> content_parameters();
  /// E_p and G parameters (Adam group).
  std::vector<torch::Tensor> translation_parameters();
  std::vector<torch::Tensor> discriminator_parameters();

  PatternEncoder& pattern_encoder_for(DomainId d);
  Discriminator& discriminator_for(DomainId judged_domain);

 private:
  NetworkConfig config_;
  bool inference_only_;
};
TORCH_MODULE(Networks);

using Params = Networks;

/// Deterministic initialization: torch default fan-in schemes seeded from
/// seed; normalization scales 1, shifts 0.
Params init_params(const NetworkConfig& config, std::uint64_t seed, bool inference_only = false);

/// Checks an image batch against the configured size; throws ShapeError.
void check_image_batch(const NetworkConfig& config, const torch::Tensor& x);

ContentCode content_encode(Params& params, const torch::Tensor& x);
PatternCode pattern_encode(Params& params, const torch::Tensor& x, DomainId d);
/// Encodes a batch whose samples come from different domains in one pass
/// (domains[i] is the controller of sample i).
PatternCode pattern_encode(Params& params, const torch::Tensor& x, const std::vector<DomainId>& domains);
torch::Tensor generate(Params& params, const ContentCode& c, const PatternCode& p);
torch::Tensor discriminate(Params& params, const torch::Tensor& x, DomainId judged_domain = DomainId::target());
torch::Tensor segment(Params& params, const ContentCode& c);

/// Converts rasters into a float batch [B,1,H,W].
torch::Tensor to_batch(std::span<const Image* const> images);

}  // namespace biuda
