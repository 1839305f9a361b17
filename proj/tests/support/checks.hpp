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

// Property checks shared by the unit tests and the acceptance binary. Each
// returns a verdict with a short human-readable detail line.

#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "errors.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "networks.hpp"
#include "report.hpp"
#include "tensor_bridge.hpp"
#include "trainer.hpp"

namespace checks {

struct Verdict {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string num(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// Shapes: batch 1..3, channels 2..5, spatial 1..6.
inline std::vector<int64_t> random_shape(std::mt19937_64& rng) {
  std::uniform_int_distribution<int64_t> b(1, 3), k(2, 5), s(1, 6);
  return {b(rng), k(rng), s(rng), s(rng)};
}

// ---------------------------------------------------------------------------
// Loss values against loop oracles
// ---------------------------------------------------------------------------

inline Verdict loss_oracles(int trials = 100, double tol = 1e-6) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260101);
  double worst = 0.0;
  auto compare = [&](const char* name, int trial, double lib, double ref) {
    const double err = std::fabs(lib - ref);
    worst = std::max(worst, err);
    if (!(err <= tol)) v.fail(std::string(name) + " trial " + std::to_string(trial) + ": " + num(lib, 12) + " vs " +
                              num(ref, 12));
  };
  using oracle::to_tensor;
  const biuda::LossWeights w;
  for (int i = 0; i < trials; ++i) {
    const auto shape = random_shape(rng);
    const std::vector<int64_t> pshape{shape[0], 1 + shape[1]};
    const auto c = oracle::uniform(shape, rng), ch = oracle::uniform(shape, rng);
    const auto p = oracle::uniform(pshape, rng), ph = oracle::uniform(pshape, rng);
    compare("cpc", i, biuda::cpc_loss(to_tensor(c), to_tensor(ch), to_tensor(p), to_tensor(ph)).item<double>(),
            oracle::cpc(c, ch, p, ph));

    const auto a = oracle::random_one_hot(shape, rng);
    const auto m = oracle::random_simplex(shape, rng), mh = oracle::random_simplex(shape, rng);
    compare("seg", i, biuda::seg_loss(to_tensor(a), to_tensor(m), w, true).item<double>(), oracle::seg(a, m));
    compare("lc", i, biuda::lc_loss(to_tensor(a), to_tensor(m), to_tensor(mh), w, true).item<double>(),
            oracle::lc(a, m, mh));

    const auto x = oracle::uniform(shape, rng, 0, 1), xh = oracle::uniform(shape, rng, 0, 1);
    compare("cycle", i, biuda::cycle_loss(to_tensor(x), to_tensor(xh)).item<double>(), oracle::cycle(x, xh));

    const std::vector<int64_t> sshape{shape[0], 1, shape[2], shape[3]};
    const auto real = oracle::uniform(sshape, rng, 0, 1), fake = oracle::uniform(sshape, rng, 0, 1);
    compare("gan_d", i, biuda::gan_loss_d(to_tensor(real), to_tensor(fake), w).item<double>(),
            oracle::gan_d(real, fake));
    compare("gan_g", i, biuda::gan_loss_g(to_tensor(fake), w).item<double>(), oracle::gan_g(fake));

    std::uniform_real_distribution<double> u(0, 5);
    const oracle::Parts parts{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    biuda::LossParts lp;
    lp.cpc_s = parts.cpc_s;
    lp.cpc_t = parts.cpc_t;
    lp.lc = parts.lc;
    lp.cycle_s = parts.cycle_s;
    lp.cycle_t = parts.cycle_t;
    lp.gan_s2t = parts.gan_s2t;
    lp.gan_t2s = parts.gan_t2s;
    compare("total", i, biuda::total_loss(lp, w), oracle::total(parts, w.cpc, w.lc, w.cycle, w.gan));
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) v.fail("runtime " + num(secs) + " s exceeds 1 min");
  if (v.ok) {
    v.detail = "7 losses x " + std::to_string(trials) + " trials, max abs error " + num(worst) + ", " + num(secs) +
               " s";
  }
  return v;
}

// ---------------------------------------------------------------------------
// Analytic gradients against central differences
// ---------------------------------------------------------------------------

/// Relative error ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||).
inline double gradient_error(const std::function<torch::Tensor(const torch::Tensor&)>& f, torch::Tensor x,
                             double h = 1e-6) {
  x = x.detach().clone().to(torch::kFloat64).requires_grad_(true);
  const auto y = f(x);
  const auto analytic = torch::autograd::grad({y}, {x})[0].detach().clone();
  auto numeric = torch::zeros_like(analytic);
  torch::NoGradGuard no_grad;
  auto flat = x.detach().clone();
  auto* data = flat.data_ptr<double>();
  auto* out = numeric.data_ptr<double>();
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = data[i];
    data[i] = orig + h;
    const double up = f(flat).item<double>();
    data[i] = orig - h;
    const double down = f(flat).item<double>();
    data[i] = orig;
    out[i] = (up - down) / (2 * h);
  }
  const double denom = std::max({analytic.norm().item<double>(), numeric.norm().item<double>(), 1e-12});
  return (analytic - numeric).norm().item<double>() / denom;
}

inline Verdict loss_gradients(double tol = 1e-4) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  torch::manual_seed(11);
  const auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  const std::vector<int64_t> shape{2, 3, 4, 4};
  const biuda::LossWeights w;
  const auto a = biuda::one_hot(torch::randint(0, 3, {2, 4, 4}), 3).to(torch::kFloat64);
  const auto probs = [&] { return torch::softmax(torch::randn(shape, opts), 1); };
  const auto m = probs(), mh = probs();
  const auto c = torch::randn(shape, opts), ch = torch::randn(shape, opts);
  const auto p = torch::randn({2, 8}, opts), ph = torch::randn({2, 8}, opts);
  // Keep |difference| away from zero, where L1 is not differentiable.
  const auto x = torch::rand(shape, opts);
  const auto xh = x + (torch::rand(shape, opts) * 0.5 + 0.1) * (torch::randint(0, 2, shape, opts) * 2 - 1);
  const auto scores = torch::rand({2, 1, 4, 4}, opts) * 0.9 + 0.05;
  const auto scores2 = torch::rand({2, 1, 4, 4}, opts) * 0.9 + 0.05;

  struct Case {
    const char* name;
    std::function<torch::Tensor(const torch::Tensor&)> f;
    torch::Tensor at;
  };
  const std::vector<Case> cases{
      {"cpc wrt content_hat", [&](const torch::Tensor& t) { return biuda::cpc_loss(c, t, p, ph); },
       c + (torch::rand(shape, opts) * 0.5 + 0.1)},
      {"cpc wrt pattern_hat", [&](const torch::Tensor& t) { return biuda::cpc_loss(c, ch, p, t); },
       p + (torch::rand({2, 8}, opts) * 0.5 + 0.1)},
      {"seg wrt probs", [&](const torch::Tensor& t) { return biuda::seg_loss(a, t, w); }, m},
      {"lc wrt probs_hat", [&](const torch::Tensor& t) { return biuda::lc_loss(a, m, t, w); }, mh},
      {"cycle wrt x_hat", [&](const torch::Tensor& t) { return biuda::cycle_loss(x, t); }, xh},
      {"gan_d wrt real", [&](const torch::Tensor& t) { return biuda::gan_loss_d(t, scores2, w); }, scores},
      {"gan_d wrt fake", [&](const torch::Tensor& t) { return biuda::gan_loss_d(scores, t, w); }, scores2},
      {"gan_g wrt fake", [&](const torch::Tensor& t) { return biuda::gan_loss_g(t, w); }, scores2},
      {"total wrt terms",
       [&](const torch::Tensor& t) {
         biuda::LossTerms terms{t[0], t[1], t[2], t[3], t[4], t[5], t[6]};
         return biuda::total_loss(terms, w);
       },
       torch::rand({7}, opts)},
  };
  double worst = 0.0;
  for (const auto& cs : cases) {
    const double err = gradient_error(cs.f, cs.at);
    worst = std::max(worst, err);
    if (!(err < tol)) v.fail(std::string(cs.name) + ": relative error " + num(err));
  }
  const double secs = seconds_since(t0);
  if (secs >= 120.0) v.fail("runtime " + num(secs) + " s exceeds 2 min");
  if (v.ok) v.detail = std::to_string(cases.size()) + " gradients, max relative error " + num(worst) + ", " + num(secs) + " s";
  return v;
}

// ---------------------------------------------------------------------------
// AdaIN moments
// ---------------------------------------------------------------------------

inline Verdict adain_moments(int trials = 20) {
  Verdict v;
  torch::manual_seed(5);
  double worst_mean = 0, worst_std = 0;
  for (int i = 0; i < trials; ++i) {
    const auto f = torch::randn({3, 6, 9, 7}) * (1 + 4 * torch::rand({3, 6, 1, 1})) + 3 * torch::randn({3, 6, 1, 1});
    const auto scale = torch::randn({3, 6}) * 2;
    const auto shift = torch::randn({3, 6}) * 2;
    const auto out = biuda::adain(f, scale, shift);
    const auto mean = out.mean({2, 3});
    const auto std = out.var({2, 3}, /*unbiased=*/false).sqrt();
    worst_mean = std::max(worst_mean, (mean - shift).abs().max().item<double>());
    worst_std = std::max(worst_std, (std - scale.abs()).abs().max().item<double>());
  }
  if (worst_mean > 1e-3) v.fail("mean deviates from shift by " + num(worst_mean));
  if (worst_std > 1e-2) v.fail("std deviates from |scale| by " + num(worst_std));
  if (v.ok) v.detail = "max |mean-shift| " + num(worst_mean) + ", max |std-|scale|| " + num(worst_std);
  return v;
}

// ---------------------------------------------------------------------------
// Weighted sum
// ---------------------------------------------------------------------------

inline Verdict total_linearity(int trials = 1000) {
  Verdict v;
  const biuda::LossWeights w;
  if (w.cpc != 0.01 || w.lc != 1.0 || w.cycle != 0.5 || w.gan != 0.01) {
    v.fail("default weights are not (0.01, 1.0, 0.5, 0.01)");
    return v;
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> mag(-30, 30);
  double worst = 0;
  for (int i = 0; i < trials; ++i) {
    double parts[7];
    for (double& x : parts) x = std::exp(mag(rng) / 5) * (rng() % 2 ? 1 : -1);
    biuda::LossParts lp;
    lp.cpc_s = parts[0];
    lp.cpc_t = parts[1];
    lp.lc = parts[2];
    lp.cycle_s = parts[3];
    lp.cycle_t = parts[4];
    lp.gan_s2t = parts[5];
    lp.gan_t2s = parts[6];
    const double expect = 0.01 * parts[0] + 0.01 * parts[1] + 1.0 * parts[2] + 0.5 * parts[3] + 0.5 * parts[4] +
                          0.01 * parts[5] + 0.01 * parts[6];
    const double got = biuda::total_loss(lp, w);
    const double err = std::fabs(got - expect) / std::max(1.0, std::fabs(expect));
    worst = std::max(worst, err);
    if (!(err <= 1e-9)) v.fail("trial " + std::to_string(i) + ": " + num(got, 17) + " vs " + num(expect, 17));
  }
  if (v.ok) v.detail = std::to_string(trials) + " random part sets, max relative error " + num(worst);
  return v;
}

// ---------------------------------------------------------------------------
// Metric hand cases
// ---------------------------------------------------------------------------

inline biuda::Mask mask_from(int h, int w, const std::function<int(int, int)>& label) {
  biuda::Mask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.at(y, x) = static_cast<std::uint8_t>(label(y, x));
  return m;
}

inline Verdict metric_hand_cases() {
  Verdict v;
  auto expect = [&](const char* what, std::optional<double> got, double want, double tol) {
    if (!got || std::fabs(*got - want) > tol) {
      v.fail(std::string(what) + ": got " + (got ? num(*got, 6) : std::string("absent")) + ", want " + num(want, 6));
    }
  };
  const auto gt = mask_from(8, 8, [](int y, int) { return y < 4 ? 1 : 0; });  // 32 pixels
  biuda::EvalSet same{{gt}, {gt}, {0}};
  expect("dice identity", biuda::dice_score(same, 1), 100.0, 0.0);
  expect("f1 identity", biuda::f1_score(same, 1), 100.0, 0.0);
  const auto disjoint = mask_from(8, 8, [](int y, int) { return y >= 4 ? 1 : 0; });
  biuda::EvalSet apart{{disjoint}, {gt}, {0}};
  expect("dice disjoint", biuda::dice_score(apart, 1), 0.0, 0.0);
  expect("f1 disjoint", biuda::f1_score(apart, 1), 0.0, 0.0);
  const auto r2 = [](std::optional<double> o) { return o ? std::optional<double>(biuda::round2(*o)) : o; };
  const auto half = mask_from(8, 8, [](int y, int) { return y < 2 ? 1 : 0; });  // 16 of 32, no false positives
  biuda::EvalSet halfset{{half}, {gt}, {0}};
  expect("dice half overlap", r2(biuda::dice_score(halfset, 1)), 66.67, 0.0);
  expect("f1 half overlap", r2(biuda::f1_score(halfset, 1)), 66.67, 0.0);
  if (biuda::perf_drop(82.35, 90.84) != 90.84 - 82.35) v.fail("perf_drop arithmetic");
  if (biuda::round2(biuda::perf_drop(82.35, 90.84)) != 8.49) v.fail("perf_drop 90.84 - 82.35 != 8.49");
  if (biuda::perf_drop(50.0, 50.0) != 0.0) v.fail("perf_drop of equal scores");
  if (biuda::perf_drop(95.0, 90.0) != -5.0) v.fail("perf_drop must keep negative drops");
  if (biuda::avg_perf_drop(10.0, 20.0) != 15.0) v.fail("avg_perf_drop(10, 20)");
  if (biuda::avg_perf_drop(7.25, 7.25) != 7.25) v.fail("avg_perf_drop(x, x)");
  if (v.ok) v.detail = "identity 100, disjoint 0, half overlap 66.67, drop 8.49, average 15";
  return v;
}

// ---------------------------------------------------------------------------
// Training-loop properties on a small configuration
// ---------------------------------------------------------------------------

/// A reduced network so the loop checks run in seconds.
inline biuda::NetworkConfig tiny_network(int image_size = 32) {
  biuda::NetworkConfig n;
  n.image_size = image_size;
  n.base_channels = 4;
  n.content_stride = 4;
  n.pattern_dim = 4;
  n.generator_blocks = 1;
  n.mapper_hidden = 16;
  n.pattern_units = 3;
  n.discriminator_units = 3;
  return n;
}

inline biuda::SynthConfig tiny_synth(int image_size = 32) {
  biuda::SynthConfig s;
  s.image_size = image_size;
  s.num_cases = 5;
  s.slices_per_case = 4;
  return s;
}

inline std::pair<biuda::SampleSet, biuda::SampleSet> tiny_sets(const biuda::DatasetBundle& bundle) {
  return {biuda::SampleSet(bundle.domain_samples(biuda::DomainId::source()), biuda::DomainId::source()),
          biuda::SampleSet(bundle.domain_samples(biuda::DomainId::target()), biuda::DomainId::target())};
}

inline Verdict uda_purity(long iterations = 5) {
  Verdict v;
  const auto bundle = biuda::synth_dataset(tiny_synth());
  auto [source, target] = tiny_sets(bundle);
  // The guard must bite when armed.
  target.arm_mask_guard(true);
  try {
    (void)target.mask(0);
    v.fail("armed guard allowed a mask read");
  } catch (const biuda::ConfigError&) {
  }
  biuda::TrainConfig tc;
  tc.iterations = iterations;
  tc.batch_size = 2;
  tc.log_every = 0;
  tc.variant = biuda::Variant::kFull;
  try {
    biuda::train(tiny_network(), tc, source, target);
  } catch (const biuda::ConfigError& e) {
    v.fail(std::string("training read a target mask: ") + e.what());
  }
  if (target.mask_reads() != 0) v.fail(std::to_string(target.mask_reads()) + " target mask reads");
  if (source.mask_reads() == 0) v.fail("source masks were never read; the counter is not wired");
  if (v.ok) {
    v.detail = std::to_string(iterations) + " full-variant steps with the target guard armed: 0 target mask reads, " +
               std::to_string(source.mask_reads()) + " source reads";
  }
  return v;
}

inline Verdict alternation_isolation(int steps = 10) {
  Verdict v;
  const auto bundle = biuda::synth_dataset(tiny_synth());
  auto [source, target] = tiny_sets(bundle);
  biuda::TrainConfig tc;
  tc.iterations = steps;
  tc.batch_size = 2;
  tc.variant = biuda::Variant::kFull;
  auto state = biuda::make_train_state(tiny_network(), tc);
  for (int k = 0; k < steps; ++k) {
    const auto bs = biuda::make_batch(source, tc.batch_size, tc.seed, 0, k, true, false);
    const auto bt = biuda::make_batch(target, tc.batch_size, tc.seed, 1, k, false, false);
    const auto d0 = biuda::discriminator_hash(state.params);
    const auto g0 = biuda::generator_side_hash(state.params);
    biuda::Recomposition r;
    biuda::generator_phase(state, bs, bt.images, &r);
    const auto d1 = biuda::discriminator_hash(state.params);
    const auto g1 = biuda::generator_side_hash(state.params);
    biuda::discriminator_phase(state, r);
    const auto d2 = biuda::discriminator_hash(state.params);
    const auto g2 = biuda::generator_side_hash(state.params);
    ++state.iteration;
    if (d1 != d0) v.fail("step " + std::to_string(k) + ": generator phase changed the discriminator");
    if (g2 != g1) v.fail("step " + std::to_string(k) + ": discriminator phase changed generator-side weights");
    if (g1 == g0) v.fail("step " + std::to_string(k) + ": generator phase left its own weights unchanged");
    if (d2 == d1) v.fail("step " + std::to_string(k) + ": discriminator phase left D unchanged");
  }
  if (v.ok) v.detail = std::to_string(steps) + " steps: D hash fixed through phase A, E_c/E_p/G/S hash fixed through phase B";
  return v;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Verdict determinism(const std::filesystem::path& scratch, long iterations = 200,
                           const biuda::NetworkConfig& net = tiny_network(),
                           const biuda::SynthConfig& synth = tiny_synth()) {
  Verdict v;
  const auto bundle = biuda::synth_dataset(synth);
  std::filesystem::create_directories(scratch);
  biuda::TrainConfig tc;
  tc.iterations = iterations;
  tc.log_every = 0;
  tc.batch_size = 4;
  tc.variant = biuda::Variant::kFull;
  tc.seed = 3;
  std::string curves[2];
  for (int run = 0; run < 2; ++run) {
    auto [source, target] = tiny_sets(bundle);
    const auto csv = scratch / ("curve" + std::to_string(run) + ".csv");
    biuda::train(net, tc, source, target, {std::nullopt, csv, nullptr});
    curves[run] = read_file(csv);
  }
  const auto lines = std::count(curves[0].begin(), curves[0].end(), '\n');
  if (lines != iterations + 1) v.fail("curve has " + std::to_string(lines) + " lines");
  if (curves[0] != curves[1]) v.fail("loss curves of identical runs differ");
  if (v.ok) v.detail = "two " + std::to_string(iterations) + "-iteration full-variant runs, byte-identical loss CSVs";
  return v;
}

}  // namespace checks
