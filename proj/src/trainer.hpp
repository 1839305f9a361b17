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

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "losses.hpp"
#include "networks.hpp"

namespace biuda {

/// Ablation ladder: each rung adds one component to the previous one.
enum class Variant { kSourceOnly, kDrpl, kDrplCpc, kDrplCpcLc, kFull };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::kSourceOnly, Variant::kDrpl, Variant::kDrplCpc, Variant::kDrplCpcLc,
                                           Variant::kFull};

struct VariantTerms {
  bool translation;      // recomposition, cycle and adversarial terms
  bool cpc;              // content-pattern consistency
  bool lc;               // segmentation of the source-to-target translation
  bool unified_encoder;  // one domain-aware pattern encoder instead of two
};
VariantTerms terms_for(Variant v);

struct TrainConfig {
  long iterations = 1000;
  int batch_size = 8;
  double lr_content = 1e-2;  // E_c and S, SGD
  double momentum = 0.9;
  double lr_pattern = 1e-3;  // E_p, Adam
  double lr_generator = 1e-3;
  double lr_discriminator = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double poly_power = 0.9;
  // Desk profile: the adversarial weight is raised from 0.01 to 1.0. With the
  // small from-scratch networks, 0.01 lets D win outright and G never
  // translates.
  LossWeights weights{.cpc = 0.01, .lc = 1.0, .cycle = 0.5, .gan = 1.0};
  Variant variant = Variant::kFull;
  std::uint64_t seed = 0;
  bool augment = true;
  long checkpoint_every = 0;  // 0: final checkpoint only
  long log_every = 100;       // progress lines on stderr; 0 disables

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// lr0 * (1 - iter / max_iter)^power; iterations past max_iter give 0.
double poly_decay(double lr0, long iter, long max_iter, double power = 0.9);

/// A read-only view of one domain's samples. Mask reads are counted and can
/// be trapped, which is how unsupervised training proves it never looks at
/// target annotations.
class SampleSet {
 public:
  SampleSet(std::vector<ImageSample> samples, DomainId domain);
  SampleSet(const SampleSet& other);

  std::size_t size() const { return samples_.size(); }
  DomainId domain() const { return domain_; }
  const Image& image(std::size_t i) const { return samples_.at(i).image; }
  int case_id(std::size_t i) const { return samples_.at(i).case_id; }
  /// True when every sample carries a mask. Does not count as a read.
  bool has_masks() const;
  /// Counted access; throws ConfigError when the guard is armed or the mask
  /// is missing.
  const Mask& mask(std::size_t i) const;

  void arm_mask_guard(bool armed) { guard_armed_ = armed; }
  std::size_t mask_reads() const { return mask_reads_.load(); }

 private:
  std::vector<ImageSample> samples_;
  DomainId domain_;
  bool guard_armed_ = false;
  mutable std::atomic<std::size_t> mask_reads_{0};
};

struct Batch {
  torch::Tensor images;  // [B,1,H,W] float
  torch::Tensor labels;  // [B,H,W] long, undefined for unlabeled batches
};

/// Batch k of a stream is a pure function of (seed, stream, k): indices are
/// drawn with replacement and augmentation parameters from the same draw.
Batch make_batch(const SampleSet& set, int batch_size, std::uint64_t seed, int stream, long k, bool labeled,
                 bool augment);

/// Produces the batch sequence, computing batch k+1 on a worker thread while
/// batch k is consumed. BIUDA_DETERMINISTIC=1 disables the worker; the
/// sequence is identical either way.
class BatchStream {
 public:
  BatchStream(const SampleSet& set, int batch_size, std::uint64_t seed, int stream, bool labeled, bool augment,
              long first = 0);
  ~BatchStream();
  BatchStream(const BatchStream&) = delete;
  BatchStream& operator=(const BatchStream&) = delete;

  Batch next();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

bool deterministic_loading_forced();

/// Networks plus optimizer state and the iteration counter. The batch
/// streams are keyed by (seed, iteration), so this is the full RNG state.
struct TrainState {
  TrainConfig config;
  Params params{nullptr};
  std::unique_ptr<torch::optim::SGD> content_opt;
  std::unique_ptr<torch::optim::Adam> pattern_opt;
  std::unique_ptr<torch::optim::Adam> generator_opt;
  std::unique_ptr<torch::optim::Adam> discriminator_opt;
  long iteration = 0;

  /// Current (decayed) rates: E_c, E_p, G, D. Absent optimizers give nullopt.
  std::array<std::optional<double>, 4> learning_rates() const;
};

/// Fresh state; the variant decides between one domain-aware pattern
/// encoder and two plain ones, overriding net.unified_pattern_encoder.
TrainState make_train_state(const NetworkConfig& net, const TrainConfig& train);

/// Recomposed images of the generator phase, kept for the discriminator phase.
struct Recomposition {
  torch::Tensor source, target;                  // real inputs
  torch::Tensor source_to_target, target_to_source;
};

/// Phase A: one update of E_c, S (and E_p, G when the variant translates).
/// Discriminator parameters are frozen for the duration.
LossReport generator_phase(TrainState& state, const Batch& source, const torch::Tensor& target_images,
                           Recomposition* recomposed);

/// Phase B: one discriminator update on detached translations.
double discriminator_phase(TrainState& state, const Recomposition& recomposed);

/// Sets the decayed learning rates for state.iteration, runs both phases and
/// advances the counter.
LossReport train_step(TrainState& state, const Batch& source, const torch::Tensor& target_images);

/// CSV training curve: iteration, every LossReport field, lr_Ec, lr_Ep,
/// lr_G, lr_D. Inactive terms are left empty.
class TrainingLog {
 public:
  explicit TrainingLog(const std::filesystem::path& path, bool append = false);
  static std::string header();
  void write(long iteration, const LossReport& report, const std::array<std::optional<double>, 4>& lrs);

 private:
  std::ofstream out_;
};

struct TrainOutputs {
  std::optional<std::filesystem::path> checkpoint;  // written at the end and every checkpoint_every
  std::optional<std::filesystem::path> curve_csv;
  std::function<void(long, const LossReport&)> on_step;
};

/// Unsupervised adaptation from labeled source to unlabeled target. Target
/// masks are never read. Resumes from `resume` when given.
TrainState train(const NetworkConfig& net, const TrainConfig& config, const SampleSet& source,
                 const SampleSet& target, const TrainOutputs& outputs = {}, TrainState* resume = nullptr);

/// Supervised E_c + S on one labeled domain with the E_c optimizer settings.
TrainState train_upper_bound(const NetworkConfig& net, const TrainConfig& config, const SampleSet& labeled,
                             const TrainOutputs& outputs = {});

/// Per-pixel argmax of S(E_c(x)). Touches nothing but E_c and S.
Mask infer(Params& params, const Image& image);
std::vector<Mask> infer(Params& params, std::span<const Image* const> images);

/// FNV-1a over the bytes of the given tensors (parameters and buffers).
std::uint64_t hash_tensors(const std::vector<torch::Tensor>& tensors);
std::uint64_t discriminator_hash(Params& params);
/// E_c, S, E_p, G parameters and buffers.
std::uint64_t generator_side_hash(Params& params);

// ---------------------------------------------------------------------------
// Checkpoints: one archive holding both configs, the iteration counter, all
// parameters and buffers, and optimizer state.
// ---------------------------------------------------------------------------

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);
/// E_c and S only.
void save_inference_checkpoint(Params& params, const std::filesystem::path& path);
/// Loads E_c and S from either kind of checkpoint.
Params load_inference_params(const std::filesystem::path& path);

}  // namespace biuda
