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

#include "losses.hpp"

#include <cmath>

#include "errors.hpp"

namespace biuda {
namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) {
    throw ShapeError(std::string(what) + ": shape " + c10::str(a.sizes()) + " vs " + c10::str(b.sizes()));
  }
}

void require_scores(const torch::Tensor& scores, const char* what) {
  // Saturated logistic outputs may reach exactly 0 or 1 in floating point;
  // those are admitted and handled by the log floor. NaN scores pass through
  // to a NaN loss so the training loop can report the diverged term.
  if (!scores.defined() || scores.numel() == 0) throw ShapeError(std::string(what) + ": empty score map");
  if ((scores < 0).any().item<bool>() || (scores > 1).any().item<bool>()) {
    throw ValueError(std::string(what) + ": scores must lie in [0, 1]");
  }
}

torch::Tensor safe_log(const torch::Tensor& x, double floor) { return torch::log(torch::clamp_min(x, floor)); }

}  // namespace

void LossWeights::validate() const {
  if (cpc < 0 || lc < 0 || cycle < 0 || gan < 0) throw ConfigError("loss weights must be non-negative");
  if (dice_smooth <= 0 || log_floor <= 0) throw ConfigError("dice_smooth and log_floor must be positive");
}

std::vector<std::pair<std::string, std::optional<double>>> LossReport::fields() const {
  return {{"cpc_s", cpc_s},     {"cpc_t", cpc_t},     {"lc", lc},       {"cycle_s", cycle_s}, {"cycle_t", cycle_t},
          {"gan_s2t", gan_s2t}, {"gan_t2s", gan_t2s}, {"total", total}, {"d_loss", d_loss}};
}

torch::Tensor cpc_loss(const torch::Tensor& content, const torch::Tensor& content_hat, const torch::Tensor& pattern,
                       const torch::Tensor& pattern_hat) {
  require_same_shape(content, content_hat, "cpc_loss content");
  require_same_shape(pattern, pattern_hat, "cpc_loss pattern");
  return (content_hat - content).abs().mean() + (pattern_hat - pattern).abs().mean();
}

torch::Tensor seg_loss(const torch::Tensor& target, const torch::Tensor& probs, const LossWeights& w, bool strict) {
  require_same_shape(target, probs, "seg_loss");
  if (target.dim() == 3) return seg_loss(target.unsqueeze(0), probs.unsqueeze(0), w, strict);
  if (target.dim() != 4) throw ShapeError("seg_loss expects [B,]K,H,W tensors");
  if (strict) {
    const auto deviation = (probs.sum(1) - 1.0).abs().max().item<double>();
    if (deviation > 1e-4) throw ValueError("seg_loss: probabilities off the simplex by " + std::to_string(deviation));
  }
  const auto ce = -(target * safe_log(probs, w.log_floor)).mean();
  const std::vector<int64_t> reduce{0, 2, 3};
  const auto overlap = (target * probs).sum(reduce);
  const auto denom = (target * target).sum(reduce) + (probs * probs).sum(reduce);
  const auto dice = ((2.0 * overlap + w.dice_smooth) / (denom + w.dice_smooth)).mean();
  return ce + (1.0 - dice);
}

torch::Tensor seg_loss_literal(const torch::Tensor& target, const torch::Tensor& probs) {
  require_same_shape(target, probs, "seg_loss_literal");
  const double n = static_cast<double>(target.numel());
  return 1.0 - (target * torch::log(probs)).sum() / n -
         (2.0 * target * probs / (target * target + probs * probs)).sum();
}

torch::Tensor lc_loss(const torch::Tensor& target, const torch::Tensor& probs, const torch::Tensor& probs_hat,
                      const LossWeights& w, bool strict) {
  return seg_loss(target, probs, w, strict) + seg_loss(target, probs_hat, w, strict);
}

torch::Tensor cycle_loss(const torch::Tensor& x, const torch::Tensor& x_hat) {
  require_same_shape(x, x_hat, "cycle_loss");
  return (x_hat - x).abs().mean();
}

torch::Tensor gan_loss_d(const torch::Tensor& real_scores, const torch::Tensor& fake_scores, const LossWeights& w) {
  require_scores(real_scores, "gan_loss_d real");
  require_scores(fake_scores, "gan_loss_d fake");
  return -(safe_log(real_scores, w.log_floor).mean() + safe_log(1.0 - fake_scores, w.log_floor).mean());
}

torch::Tensor gan_loss_g(const torch::Tensor& fake_scores, const LossWeights& w) {
  require_scores(fake_scores, "gan_loss_g");
  return -safe_log(fake_scores, w.log_floor).mean();
}

double total_loss(const LossParts& parts, const LossWeights& w, long iteration) {
  const std::pair<const char*, std::optional<double>> named[] = {
      {"cpc_s", parts.cpc_s},     {"cpc_t", parts.cpc_t},     {"lc", parts.lc},          {"cycle_s", parts.cycle_s},
      {"cycle_t", parts.cycle_t}, {"gan_s2t", parts.gan_s2t}, {"gan_t2s", parts.gan_t2s},
  };
  for (const auto& [name, value] : named) {
    if (value && !std::isfinite(*value)) throw NumericalError(name, iteration);
  }
  auto v = [](const std::optional<double>& x) { return x.value_or(0.0); };
  return w.cpc * (v(parts.cpc_s) + v(parts.cpc_t)) + w.lc * parts.lc + w.cycle * (v(parts.cycle_s) + v(parts.cycle_t)) +
         w.gan * (v(parts.gan_s2t) + v(parts.gan_t2s));
}

torch::Tensor total_loss(const LossTerms& t, const LossWeights& w) {
  torch::Tensor total = t.lc.defined() ? w.lc * t.lc : torch::zeros({});
  auto add = [&](const torch::Tensor& term, double weight) {
    if (term.defined()) total = total + weight * term;
  };
  add(t.cpc_s, w.cpc);
  add(t.cpc_t, w.cpc);
  add(t.cycle_s, w.cycle);
  add(t.cycle_t, w.cycle);
  add(t.gan_s2t, w.gan);
  add(t.gan_t2s, w.gan);
  return total;
}

torch::Tensor one_hot(const torch::Tensor& labels, int num_classes) {
  return torch::one_hot(labels.to(torch::kLong), num_classes).permute({0, 3, 1, 2}).to(torch::kFloat32);
}

}  // namespace biuda
