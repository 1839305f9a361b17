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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace biuda {

/// Predictions and references for one evaluation, in matching order.
struct EvalSet {
  std::vector<Mask> predictions;
  std::vector<Mask> references;
  std::vector<int> case_ids;

  void append(const EvalSet& other);
  void check() const;
};

/// Dice for class k in percent: per case over the case's pooled pixels,
/// then averaged over cases. Cases where neither mask has k are skipped;
/// nullopt when every case is skipped.
std::optional<double> dice_score(const EvalSet& set, int k);

/// F1 for class k in percent from pixel counts pooled over the whole set.
std::optional<double> f1_score(const EvalSet& set, int k);

double perf_drop(double uda_percent, double upper_bound_percent);
double avg_perf_drop(double forward_drop, double backward_drop);

inline constexpr const char* kForward = "forward";
inline constexpr const char* kBackward = "backward";
inline constexpr const char* kSourceBound = "M2M";  // trained and tested on domain 0
inline constexpr const char* kTargetBound = "C2C";  // trained and tested on domain 1
inline constexpr const char* kMeanClass = "mean";

struct MetricsRow {
  std::string method;
  std::string direction;  // forward, backward, M2M or C2C
  std::string class_name;
  std::optional<double> dice;
  std::optional<double> f1;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

using MetricsTable = std::vector<MetricsRow>;

/// One row per foreground class plus a "mean" row averaging the classes
/// that are present.
MetricsTable score(const EvalSet& set, const std::vector<std::string>& class_names, const std::string& method,
                   const std::string& direction);

/// Two-decimal rounding used for every reported percentage.
double round2(double v);

}  // namespace biuda
