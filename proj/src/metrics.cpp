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

#include "metrics.hpp"

#include <cmath>
#include <map>

#include "errors.hpp"

namespace biuda {

void EvalSet::append(const EvalSet& other) {
  predictions.insert(predictions.end(), other.predictions.begin(), other.predictions.end());
  references.insert(references.end(), other.references.begin(), other.references.end());
  case_ids.insert(case_ids.end(), other.case_ids.begin(), other.case_ids.end());
}

void EvalSet::check() const {
  if (predictions.size() != references.size() || predictions.size() != case_ids.size()) {
    throw ShapeError("evaluation set has " + std::to_string(predictions.size()) + " predictions, " +
                     std::to_string(references.size()) + " references and " + std::to_string(case_ids.size()) +
                     " case ids");
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!predictions[i].same_shape(references[i])) {
      throw ShapeError("prediction " + std::to_string(i) + " and its reference differ in size");
    }
  }
}

namespace {

struct Counts {
  long long tp = 0, fp = 0, fn = 0;
  void add(const Mask& pred, const Mask& ref, int k) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred.data[i] == k;
      const bool g = ref.data[i] == k;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  }
  std::optional<double> dice() const {
    const long long denom = 2 * tp + fp + fn;
    if (denom == 0) return std::nullopt;
    return 100.0 * 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
};

}  // namespace

std::optional<double> dice_score(const EvalSet& set, int k) {
  set.check();
  std::map<int, Counts> per_case;  // sorted ids keep the reduction order fixed
  for (std::size_t i = 0; i < set.predictions.size(); ++i) {
    per_case[set.case_ids[i]].add(set.predictions[i], set.references[i], k);
  }
  double sum = 0.0;
  int n = 0;
  for (const auto& [id, counts] : per_case) {
    if (const auto d = counts.dice()) {
      sum += *d;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> f1_score(const EvalSet& set, int k) {
  set.check();
  Counts c;
  for (std::size_t i = 0; i < set.predictions.size(); ++i) c.add(set.predictions[i], set.references[i], k);
  if (c.tp == 0) {
    // Precision or recall is zero (or undefined); F1 is 0 when anything
    // of class k was predicted or present, absent otherwise.
    if (c.fp + c.fn == 0) return std::nullopt;
    return 0.0;
  }
  const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double perf_drop(double uda_percent, double upper_bound_percent) { return upper_bound_percent - uda_percent; }

double avg_perf_drop(double forward_drop, double backward_drop) { return (forward_drop + backward_drop) / 2.0; }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

MetricsTable score(const EvalSet& set, const std::vector<std::string>& class_names, const std::string& method,
                   const std::string& direction) {
  if (class_names.size() < 2) throw ConfigError("need at least two classes to score");
  MetricsTable table;
  double dice_sum = 0.0, f1_sum = 0.0;
  int dice_n = 0, f1_n = 0;
  for (std::size_t k = 1; k < class_names.size(); ++k) {
    MetricsRow row{method, direction, class_names[k], dice_score(set, static_cast<int>(k)),
                   f1_score(set, static_cast<int>(k))};
    if (row.dice) {
      dice_sum += *row.dice;
      ++dice_n;
    }
    if (row.f1) {
      f1_sum += *row.f1;
      ++f1_n;
    }
    table.push_back(std::move(row));
  }
  MetricsRow mean{method, direction, kMeanClass, std::nullopt, std::nullopt};
  if (dice_n > 0) mean.dice = dice_sum / dice_n;
  if (f1_n > 0) mean.f1 = f1_sum / f1_n;
  table.push_back(std::move(mean));
  return table;
}

}  // namespace biuda
