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

#include <optional>
#include <string>
#include <vector>

namespace biuda {

struct LossWeights {
  double cpc = 0.01;    // lambda_1
  double lc = 1.0;      // lambda_2
  double cycle = 0.5;   // lambda_3
  double gan = 0.01;    // lambda_4
  double dice_smooth = 1e-5;
  double log_floor = 1e-8;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// The generator-side terms entering the weighted total. Inactive terms are
/// left empty and contribute zero.
struct LossParts {
  std::optional<double> cpc_s, cpc_t;
  double lc = 0.0;
  std::optional<double> cycle_s, cycle_t;
  std::optional<double> gan_s2t, gan_t2s;
};

struct LossReport : LossParts {
  double total = 0.0;
  std::optional<double> d_loss;

  /// (name, value) pairs in CSV column order; empty optionals stay empty.
  std::vector<std::pair<std::string, std::optional<double>>> fields() const;
};

/// L1 distances between codes of an input and of its reconstruction,
/// each averaged over every element.
torch::Tensor cpc_loss(const torch::Tensor& content, const torch::Tensor& content_hat, const torch::Tensor& pattern,
                       const torch::Tensor& pattern_hat);

/// Cross-entropy averaged over every location and channel plus
/// (1 - mean over classes of the smoothed soft Dice). target is one-hot and
/// probs a per-pixel simplex, both [B,]K,H,W. With strict set, probs whose
/// per-pixel sums are off by more than 1e-4 raise ValueError.
torch::Tensor seg_loss(const torch::Tensor& target, const torch::Tensor& probs, const LossWeights& w = {},
                       bool strict = false);

/// Term-by-term transcription of the printed formula,
/// 1 - (1/N) sum a log m - sum 2am / (a^2 + m^2). Unnormalized and undefined
/// where a = m = 0; kept only as a reference for tiny strictly positive inputs.
torch::Tensor seg_loss_literal(const torch::Tensor& target, const torch::Tensor& probs);

/// seg(a, m) + seg(a, m_hat): supervision of the source image and of its
/// source-to-target translation with the same annotation.
torch::Tensor lc_loss(const torch::Tensor& target, const torch::Tensor& probs, const torch::Tensor& probs_hat,
                      const LossWeights& w = {}, bool strict = false);

/// Mean absolute pixel difference.
torch::Tensor cycle_loss(const torch::Tensor& x, const torch::Tensor& x_hat);

/// -[mean log D(real) + mean log(1 - D(fake))] with logs floored at log_floor.
torch::Tensor gan_loss_d(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                         const LossWeights& w = {});

/// Non-saturating generator objective, -mean log D(fake).
torch::Tensor gan_loss_g(const torch::Tensor& fake_scores, const LossWeights& w = {});

/// lambda_1 (cpc_s + cpc_t) + lambda_2 lc + lambda_3 (cycle_s + cycle_t)
/// + lambda_4 (gan_s2t + gan_t2s). Throws NumericalError naming the first
/// non-finite part.
double total_loss(const LossParts& parts, const LossWeights& w, long iteration = -1);

/// Differentiable counterpart used by the trainer; term tensors may be
/// undefined when inactive.
struct LossTerms {
  torch::Tensor cpc_s, cpc_t, lc, cycle_s, cycle_t, gan_s2t, gan_t2s;
};
torch::Tensor total_loss(const LossTerms& terms, const LossWeights& w);

/// One-hot encoding of an integer label batch [B,H,W] into [B,K,H,W].
torch::Tensor one_hot(const torch::Tensor& labels, int num_classes);

}  // namespace biuda
