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

// Conversions between oracle arrays and tensors.

#pragma once

#include <torch/torch.h>

#include "oracles.hpp"

namespace oracle {

inline torch::Tensor to_tensor(const Array& a, torch::Dtype dtype = torch::kFloat64) {
  auto t = torch::empty(a.shape, torch::kFloat64);
  std::copy(a.v.begin(), a.v.end(), t.data_ptr<double>());
  return t.to(dtype);
}

inline Array from_tensor(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat64).contiguous();
  Array a{std::vector<int64_t>(c.sizes().begin(), c.sizes().end()), {}};
  a.v.assign(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
  return a;
}

}  // namespace oracle
