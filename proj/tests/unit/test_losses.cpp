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

#include <cmath>
#include <limits>

#include "checks.hpp"
// c10 defines a CHECK macro of its own; the test assertion takes over.
#undef CHECK
#include "doctest.h"
#include "errors.hpp"
#include "losses.hpp"
#include "tensor_bridge.hpp"

using namespace biuda;

namespace {

const auto kF64 = torch::TensorOptions().dtype(torch::kFloat64);

torch::Tensor simplex(std::vector<int64_t> shape) { return torch::softmax(torch::randn(shape, kF64), 1); }

}  // namespace

TEST_CASE("losses agree with the loop oracles") {
  const auto v = checks::loss_oracles(100);
  INFO(v.detail);
  CHECK(v.ok);
}

TEST_CASE("loss gradients agree with central differences") {
  const auto v = checks::loss_gradients();
  INFO(v.detail);
  CHECK(v.ok);
}

TEST_CASE("weighted sum uses the documented defaults") {
  const LossWeights w;
  CHECK(w.cpc == 0.01);
  CHECK(w.lc == 1.0);
  CHECK(w.cycle == 0.5);
  CHECK(w.gan == 0.01);
  const auto v = checks::total_linearity();
  INFO(v.detail);
  CHECK(v.ok);
}

TEST_CASE("total_loss names the first non-finite term") {
  LossParts p;
  p.lc = 0.3;
  p.cycle_s = 0.1;
  p.gan_s2t = std::numeric_limits<double>::quiet_NaN();
  p.gan_t2s = std::numeric_limits<double>::infinity();
  try {
    total_loss(p, LossWeights{}, 17);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.term() == "gan_s2t");
    CHECK(e.iteration() == 17);
  }
}

TEST_CASE("inactive parts contribute nothing") {
  LossParts p;
  p.lc = 2.0;
  CHECK(total_loss(p, LossWeights{}) == 2.0);
  LossTerms t;
  t.lc = torch::tensor(2.0, kF64);
  CHECK(total_loss(t, LossWeights{}).item<double>() == 2.0);
}

TEST_CASE("cpc loss") {
  torch::manual_seed(1);
  const auto c = torch::randn({2, 4, 3, 3}, kF64), p = torch::randn({2, 8}, kF64);
  CHECK(cpc_loss(c, c, p, p).item<double>() == 0.0);
  CHECK(cpc_loss(c, c + 1.0, p, p).item<double>() == doctest::Approx(1.0));
  CHECK(cpc_loss(c, c, p, p - 2.0).item<double>() == doctest::Approx(2.0));
  CHECK_THROWS_AS(cpc_loss(c, c.narrow(1, 0, 2), p, p), ShapeError);
}

TEST_CASE("segmentation loss") {
  torch::manual_seed(2);
  const auto labels = torch::randint(0, 4, {2, 5, 5});
  const auto a = one_hot(labels, 4).to(torch::kFloat64);

  SUBCASE("one_hot layout") {
    CHECK(a.sizes() == torch::IntArrayRef({2, 4, 5, 5}));
    CHECK(torch::equal(a.argmax(1), labels));
    CHECK(torch::allclose(a.sum(1), torch::ones({2, 5, 5}, kF64)));
  }
  SUBCASE("perfect prediction costs nothing") { CHECK(seg_loss(a, a).item<double>() == doctest::Approx(0.0).epsilon(1e-7)); }
  SUBCASE("uniform prediction") {
    const auto m = torch::full_like(a, 0.25);
    const double got = seg_loss(a, m).item<double>();
    CHECK(got == doctest::Approx(oracle::seg(oracle::from_tensor(a), oracle::from_tensor(m))).epsilon(1e-12));
    CHECK(got > 0.3);
  }
  SUBCASE("lc is the sum over both predictions") {
    const auto m = simplex({2, 4, 5, 5}), mh = simplex({2, 4, 5, 5});
    CHECK(lc_loss(a, m, mh).item<double>() ==
          doctest::Approx(seg_loss(a, m).item<double>() + seg_loss(a, mh).item<double>()));
  }
  SUBCASE("3-D inputs are treated as a batch of one") {
    const auto m = simplex({1, 4, 5, 5});
    CHECK(seg_loss(a[0], m[0]).item<double>() == doctest::Approx(seg_loss(a.narrow(0, 0, 1), m).item<double>()));
  }
  SUBCASE("strict mode rejects distributions off the simplex") {
    const auto m = simplex({2, 4, 5, 5}) * 1.1;
    CHECK_THROWS_AS(seg_loss(a, m, LossWeights{}, true), ValueError);
    CHECK_NOTHROW(seg_loss(a, m, LossWeights{}, false));
  }
  SUBCASE("zero probabilities stay finite through the log floor") {
    auto m = a.clone();
    m.index_put_({0, torch::indexing::Slice(), 0, 0}, torch::tensor({0.0, 0.0, 0.0, 0.0}, kF64));
    CHECK(std::isfinite(seg_loss(a, m).item<double>()));
  }
  SUBCASE("shape mismatch") { CHECK_THROWS_AS(seg_loss(a, a.narrow(1, 0, 3)), ShapeError); }
}

TEST_CASE("literal formula transcription") {
  torch::manual_seed(3);
  const auto a = torch::rand({1, 2, 3, 3}, kF64) * 0.8 + 0.1;
  const auto m = torch::rand({1, 2, 3, 3}, kF64) * 0.8 + 0.1;
  const auto oa = oracle::from_tensor(a), om = oracle::from_tensor(m);
  double ce = 0, dice = 0;
  for (std::size_t i = 0; i < oa.v.size(); ++i) {
    ce += oa.v[i] * std::log(om.v[i]);
    dice += 2 * oa.v[i] * om.v[i] / (oa.v[i] * oa.v[i] + om.v[i] * om.v[i]);
  }
  const double expect = 1.0 - ce / static_cast<double>(oa.v.size()) - dice;
  CHECK(seg_loss_literal(a, m).item<double>() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("cycle loss") {
  const auto x = torch::zeros({1, 1, 2, 2}, kF64);
  CHECK(cycle_loss(x, x).item<double>() == 0.0);
  CHECK(cycle_loss(x, x + 0.5).item<double>() == doctest::Approx(0.5));
  CHECK_THROWS_AS(cycle_loss(x, torch::zeros({1, 1, 2, 3}, kF64)), ShapeError);
}

TEST_CASE("adversarial losses") {
  const auto ones = torch::ones({2, 1, 4, 4}, kF64);
  const auto zeros = torch::zeros({2, 1, 4, 4}, kF64);
  const auto half = torch::full({2, 1, 4, 4}, 0.5, kF64);

  SUBCASE("a perfect discriminator costs nothing") { CHECK(gan_loss_d(ones, zeros).item<double>() == 0.0); }
  SUBCASE("chance level") {
    CHECK(gan_loss_d(half, half).item<double>() == doctest::Approx(2 * std::log(2.0)));
    CHECK(gan_loss_g(half).item<double>() == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("saturated scores are clamped at the log floor") {
    const double floor_cost = -std::log(1e-8);
    CHECK(gan_loss_d(zeros, ones).item<double>() == doctest::Approx(2 * floor_cost));
    CHECK(gan_loss_g(zeros).item<double>() == doctest::Approx(floor_cost));
  }
  SUBCASE("scores outside [0,1] are rejected") {
    CHECK_THROWS_AS(gan_loss_g(ones * 1.5), ValueError);
    CHECK_THROWS_AS(gan_loss_d(ones, zeros - 0.1), ValueError);
  }
  SUBCASE("NaN scores give a NaN loss for the caller to report") {
    CHECK(std::isnan(gan_loss_g(torch::full({1}, std::nan(""), kF64)).item<double>()));
    CHECK(std::isnan(gan_loss_d(torch::full_like(zeros, std::nan("")), zeros).item<double>()));
  }
  SUBCASE("generator loss decreases as the discriminator is fooled") {
    CHECK(gan_loss_g(torch::full({4}, 0.9, kF64)).item<double>() < gan_loss_g(torch::full({4}, 0.1, kF64)).item<double>());
  }
}

TEST_CASE("loss weights validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.gan = -1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w = LossWeights{};
  w.dice_smooth = 0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("report fields follow the CSV order") {
  LossReport r;
  r.lc = 1.5;
  r.total = 1.5;
  const auto f = r.fields();
  REQUIRE(f.size() == 9u);
  const char* names[] = {"cpc_s", "cpc_t", "lc", "cycle_s", "cycle_t", "gan_s2t", "gan_t2s", "total", "d_loss"};
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i].first == names[i]);
  CHECK_FALSE(f[0].second.has_value());
  CHECK(*f[2].second == 1.5);
}
