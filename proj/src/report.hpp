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
#include <optional>
#include <string>
#include <vector>

#include "metrics.hpp"

namespace biuda {

inline constexpr const char* kMetricsHeader = "method,direction,class,dice,f1";
inline constexpr const char* kDropHeader = "method,class,forward_drop,backward_drop,avg_drop,gap";

void write_metrics_csv(const MetricsTable& table, const std::filesystem::path& path);
MetricsTable read_metrics_csv(const std::filesystem::path& path);

/// Dice drops of one method for one class (or the mean).
struct DropRow {
  std::string method;
  std::string class_name;
  std::optional<double> forward_drop;
  std::optional<double> backward_drop;
  std::optional<double> avg_drop;
  std::optional<double> gap;  // |forward - backward|
};

/// Pairs each UDA row with the bound of its target domain: forward runs
/// (target domain 1) against C2C, backward runs against M2M. Throws
/// ReportError when a bound or a direction is missing.
std::vector<DropRow> compute_drops(const MetricsTable& table, bool use_f1 = false);

/// Methods in order of first appearance, bounds excluded.
std::vector<std::string> report_methods(const MetricsTable& table);

struct ReportFiles {
  std::filesystem::path table_csv;
  std::filesystem::path drop_csv;
  std::filesystem::path chart_svg;
};

/// Writes the drop table (per-class Dice and F1 drops plus the mean, one
/// row per method and direction), the drop/gap CSV and a bar chart of the
/// mean forward and backward Dice drops.
ReportFiles write_report(const MetricsTable& table, const std::filesystem::path& out_dir);

}  // namespace biuda
