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

#include <filesystem>
#include <string>
#include <vector>

#include "config_io.hpp"
#include "metrics.hpp"
#include "report.hpp"

namespace biuda {

/// Training samples of one domain: every fold except `held_out` (all folds
/// when held_out < 0 is not allowed; pass a concrete fold).
SampleSet training_set(const DatasetBundle& bundle, DomainId domain, int held_out);
/// Held-out samples of one domain, masks included.
std::vector<ImageSample> held_out_samples(const DatasetBundle& bundle, DomainId domain, int fold);

/// Scores a checkpoint on the held-out fold of one domain.
MetricsTable evaluate(const std::filesystem::path& checkpoint, const DatasetBundle& bundle, DomainId domain, int fold,
                      const std::string& method, const std::string& direction);
/// Predictions only, for pooling across folds.
EvalSet predict(const std::filesystem::path& checkpoint, const DatasetBundle& bundle, DomainId domain, int fold);

/// Output layout under config.out.
std::string method_name(const ExperimentConfig& config);
std::filesystem::path uda_run_dir(const ExperimentConfig& config, Direction direction);
std::filesystem::path upper_run_dir(const ExperimentConfig& config, DomainId domain);

inline constexpr const char* kCheckpointFile = "checkpoint.pt";
inline constexpr const char* kCurveFile = "loss_curve.csv";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kReportDir = "report";

/// Command bodies shared by the C API and the tests. Each writes the
/// resolved configuration into every run directory it creates.
void run_synth(const ExperimentConfig& config);
void run_train(const ExperimentConfig& config);
/// domain < 0 trains both bounds.
void run_train_upper(const ExperimentConfig& config, int domain = -1);
/// Scores every run directory found under config.out into metrics.csv.
MetricsTable run_eval(const ExperimentConfig& config);
ReportFiles run_report(const ExperimentConfig& config);
/// synth, both bounds, every variant in both directions, eval, report.
ReportFiles run_repro(const ExperimentConfig& config);

}  // namespace biuda
