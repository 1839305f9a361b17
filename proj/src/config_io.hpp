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

#include <nlohmann/json.hpp>

#include "dataset.hpp"
#include "networks.hpp"
#include "trainer.hpp"

namespace biuda {

enum class Direction { kForward, kBackward, kBoth };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view name);

/// Everything a run needs. Serialized as one flat JSON object; see
/// config_keys() for the key list.
struct ExperimentConfig {
  SynthConfig synth;
  NetworkConfig network;
  TrainConfig train;
  long upper_iterations = 1000;
  std::string data = "data";
  std::string out = "out";
  Direction direction = Direction::kForward;
  int fold = 0;  // -1 means every fold
  std::string method;  // run label in reports; empty selects the variant name

  /// Cross-field checks on top of the per-struct validate() calls.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Documented flat keys in serialization order.
const std::vector<ConfigKey>& config_keys();

nlohmann::json to_json(const ExperimentConfig& config);
/// Applies the keys present in j on top of base. Unknown keys and
/// ill-typed values raise ConfigError.
ExperimentConfig apply_json(ExperimentConfig base, const nlohmann::json& j);
ExperimentConfig load_config_file(const std::filesystem::path& path);
void write_config_file(const ExperimentConfig& config, const std::filesystem::path& path);

/// Subsets used inside checkpoints; the same flat key names.
nlohmann::json to_json(const NetworkConfig& config);
nlohmann::json to_json(const TrainConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Parses a fold argument: an integer or "all".
int parse_fold(std::string_view text);
std::string fold_to_string(int fold);

}  // namespace biuda
