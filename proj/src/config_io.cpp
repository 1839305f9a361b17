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

#include "config_io.hpp"

#include <fstream>
#include <functional>

#include "errors.hpp"

namespace biuda {

using nlohmann::json;

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kForward: return "forward";
    case Direction::kBackward: return "backward";
    case Direction::kBoth: return "both";
  }
  return "unknown";
}

Direction parse_direction(std::string_view name) {
  if (name == "forward") return Direction::kForward;
  if (name == "backward") return Direction::kBackward;
  if (name == "both") return Direction::kBoth;
  throw ConfigError("unknown direction '" + std::string(name) + "' (expected forward, backward or both)");
}

int parse_fold(std::string_view text) {
  if (text == "all") return -1;
  try {
    std::size_t used = 0;
    const int fold = std::stoi(std::string(text), &used);
    if (used == text.size() && fold >= 0) return fold;
  } catch (const std::exception&) {
  }
  throw ConfigError("fold must be a non-negative integer or 'all', got '" + std::string(text) + "'");
}

std::string fold_to_string(int fold) { return fold < 0 ? "all" : std::to_string(fold); }

void ExperimentConfig::validate() const {
  synth.validate();
  network.validate();
  train.validate();
  if (synth.image_size != network.image_size || synth.num_classes != network.num_classes) {
    throw ConfigError("synthetic and network image_size/num_classes disagree");
  }
  if (upper_iterations < 0) throw ConfigError("upper_iterations must be non-negative");
  if (fold >= synth.folds) {
    throw ConfigError("fold " + std::to_string(fold) + " is out of range for " + std::to_string(synth.folds) + " folds");
  }
  if (out.empty()) throw ConfigError("output directory must not be empty");
}

namespace {

enum Group : unsigned { kSynth = 1, kNetwork = 2, kTrain = 4, kRun = 8 };

struct Entry {
  ConfigKey key;
  unsigned groups;
  std::function<json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&)> set;
};

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw ConfigError("config key '" + key + "' must be " + expected);
}

template <typename T>
T read_as(const std::string& key, const json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) bad_type(key, "a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) bad_type(key, "an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) return v.get<T>();
      if (v.get<long long>() < 0) bad_type(key, "a non-negative integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) bad_type(key, "a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad_type(key, "a string");
  }
  return v.get<T>();
}

// A key bound to one member reachable from ExperimentConfig.
template <typename T, typename Access>
Entry field(std::string name, std::string help, unsigned groups, Access access) {
  Entry e{{name, std::move(help)}, groups, nullptr, nullptr};
  e.get = [access](const ExperimentConfig& c) { return json(access(const_cast<ExperimentConfig&>(c))); };
  e.set = [access, name](ExperimentConfig& c, const json& v) { access(c) = read_as<T>(name, v); };
  return e;
}

std::vector<Entry> build_entries() {
  std::vector<Entry> e;
  // Shared between the generator and the networks.
  e.push_back({{"image_size", "square image side in pixels (>= 16)"},
               kSynth | kNetwork,
               [](const ExperimentConfig& c) { return json(c.network.image_size); },
               [](ExperimentConfig& c, const json& v) {
                 c.synth.image_size = c.network.image_size = read_as<int>("image_size", v);
               }});
  e.push_back({{"num_classes", "K, background included"},
               kSynth | kNetwork,
               [](const ExperimentConfig& c) { return json(c.network.num_classes); },
               [](ExperimentConfig& c, const json& v) {
                 c.synth.num_classes = c.network.num_classes = read_as<int>("num_classes", v);
               }});

  e.push_back(field<int>("num_cases", "synthetic cases per domain", kSynth,
                         [](ExperimentConfig& c) -> auto& { return c.synth.num_cases; }));
  e.push_back(field<int>("slices_per_case", "synthetic slices per case", kSynth,
                         [](ExperimentConfig& c) -> auto& { return c.synth.slices_per_case; }));
  e.push_back(field<int>("folds", "cross-validation folds", kSynth,
                         [](ExperimentConfig& c) -> auto& { return c.synth.folds; }));
  e.push_back(field<std::uint64_t>("data_seed", "seed of the synthetic generator and the fold split", kSynth,
                                   [](ExperimentConfig& c) -> auto& { return c.synth.seed; }));
  for (int d = 0; d < 2; ++d) {
    const std::string p = "domain" + std::to_string(d) + "_";
    e.push_back(field<bool>(p + "invert", "intensity inversion", kSynth,
                            [d](ExperimentConfig& c) -> auto& { return c.synth.appearance[d].invert; }));
    e.push_back(field<double>(p + "blur", "Gaussian blur sigma in pixels", kSynth,
                              [d](ExperimentConfig& c) -> auto& { return c.synth.appearance[d].blur_sigma; }));
    e.push_back(field<double>(p + "noise", "additive Gaussian noise std", kSynth,
                              [d](ExperimentConfig& c) -> auto& { return c.synth.appearance[d].noise_std; }));
    e.push_back(field<double>(p + "texture_frequency", "texture cycles per image side", kSynth,
                              [d](ExperimentConfig& c) -> auto& { return c.synth.appearance[d].texture_frequency; }));
    e.push_back(field<double>(p + "texture_amplitude", "texture amplitude", kSynth,
                              [d](ExperimentConfig& c) -> auto& { return c.synth.appearance[d].texture_amplitude; }));
  }

  e.push_back(field<int>("base_channels", "width of the first convolution", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.base_channels; }));
  e.push_back(field<int>("content_stride", "downsampling factor of the content code", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.content_stride; }));
  e.push_back(field<int>("content_channels", "content code channels, 0 for 4 * base_channels", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.content_channels; }));
  e.push_back(field<int>("pattern_dim", "pattern code length", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.pattern_dim; }));
  e.push_back(field<int>("generator_blocks", "AdaIN residual blocks in G", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.generator_blocks; }));
  e.push_back(field<int>("mapper_hidden", "hidden width of the pattern-to-AdaIN mapper", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.mapper_hidden; }));
  e.push_back(field<int>("pattern_units", "stride-2 units in the pattern encoder", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.pattern_units; }));
  e.push_back(field<int>("discriminator_units", "stride-2 units in the discriminator", kNetwork,
                         [](ExperimentConfig& c) -> auto& { return c.network.discriminator_units; }));
  e.push_back(field<std::vector<int>>("pyramid_scales", "pooling grid sizes of the pyramid module", kNetwork,
                                      [](ExperimentConfig& c) -> auto& { return c.network.pyramid_scales; }));
  e.push_back({{"domain_injection", "how the pattern encoder sees d: input_channel or embedding"},
               kNetwork,
               [](const ExperimentConfig& c) {
                 return json(c.network.domain_injection == DomainInjection::kEmbedding ? "embedding" : "input_channel");
               },
               [](ExperimentConfig& c, const json& v) {
                 const auto s = read_as<std::string>("domain_injection", v);
                 if (s == "input_channel") {
                   c.network.domain_injection = DomainInjection::kInputChannel;
                 } else if (s == "embedding") {
                   c.network.domain_injection = DomainInjection::kEmbedding;
                 } else {
                   throw ConfigError("domain_injection must be input_channel or embedding, got '" + s + "'");
                 }
               }});
  e.push_back(field<bool>("shared_discriminator", "one discriminator judging both domains", kNetwork,
                          [](ExperimentConfig& c) -> auto& { return c.network.shared_discriminator; }));
  e.push_back(field<bool>("unified_pattern_encoder", "one domain-aware pattern encoder (set by the variant)",
                          kNetwork, [](ExperimentConfig& c) -> auto& { return c.network.unified_pattern_encoder; }));

  e.push_back(field<long>("iterations", "UDA training iterations", kTrain,
                          [](ExperimentConfig& c) -> auto& { return c.train.iterations; }));
  e.push_back(field<int>("batch_size", "images per domain per step", kTrain,
                         [](ExperimentConfig& c) -> auto& { return c.train.batch_size; }));
  e.push_back(field<double>("lr_content", "SGD learning rate of E_c and S", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.lr_content; }));
  e.push_back(field<double>("momentum", "SGD momentum", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.momentum; }));
  e.push_back(field<double>("lr_pattern", "Adam learning rate of E_p", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.lr_pattern; }));
  e.push_back(field<double>("lr_generator", "Adam learning rate of G", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.lr_generator; }));
  e.push_back(field<double>("lr_discriminator", "Adam learning rate of D", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.lr_discriminator; }));
  e.push_back(field<double>("adam_beta1", "Adam beta1", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.adam_beta1; }));
  e.push_back(field<double>("adam_beta2", "Adam beta2", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.adam_beta2; }));
  e.push_back(field<double>("poly_power", "exponent of the polynomial decay", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.poly_power; }));
  e.push_back(field<double>("lambda_cpc", "weight of the content-pattern consistency loss", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.weights.cpc; }));
  e.push_back(field<double>("lambda_lc", "weight of the segmentation and label consistency loss", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.weights.lc; }));
  e.push_back(field<double>("lambda_cycle", "weight of the cycle loss", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.weights.cycle; }));
  e.push_back(field<double>("lambda_gan", "weight of the adversarial loss", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.weights.gan; }));
  e.push_back(field<double>("dice_smooth", "Dice smoothing constant", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.weights.dice_smooth; }));
  e.push_back(field<double>("log_floor", "lower clamp inside logarithms", kTrain,
                            [](ExperimentConfig& c) -> auto& { return c.train.weights.log_floor; }));
  e.push_back({{"variant", "source_only, drpl, drpl_cpc, drpl_cpc_lc or full"},
               kTrain,
               [](const ExperimentConfig& c) { return json(std::string(to_string(c.train.variant))); },
               [](ExperimentConfig& c, const json& v) {
                 c.train.variant = parse_variant(read_as<std::string>("variant", v));
               }});
  e.push_back(field<std::uint64_t>("seed", "seed of initialization and batch sampling", kTrain,
                                   [](ExperimentConfig& c) -> auto& { return c.train.seed; }));
  e.push_back(field<bool>("augment", "random crop, flip and rotation on both domains", kTrain,
                          [](ExperimentConfig& c) -> auto& { return c.train.augment; }));
  e.push_back(field<long>("checkpoint_every", "intermediate checkpoint period, 0 for final only", kTrain,
                          [](ExperimentConfig& c) -> auto& { return c.train.checkpoint_every; }));
  e.push_back(field<long>("log_every", "progress line period on stderr, 0 for silence", kTrain,
                          [](ExperimentConfig& c) -> auto& { return c.train.log_every; }));

  e.push_back(field<long>("upper_iterations", "iterations of supervised upper-bound training", kRun,
                          [](ExperimentConfig& c) -> auto& { return c.upper_iterations; }));
  e.push_back(field<std::string>("data", "dataset root", kRun, [](ExperimentConfig& c) -> auto& { return c.data; }));
  e.push_back(field<std::string>("out", "output directory", kRun, [](ExperimentConfig& c) -> auto& { return c.out; }));
  e.push_back({{"direction", "forward (0 to 1), backward (1 to 0) or both"},
               kRun,
               [](const ExperimentConfig& c) { return json(std::string(to_string(c.direction))); },
               [](ExperimentConfig& c, const json& v) {
                 c.direction = parse_direction(read_as<std::string>("direction", v));
               }});
  e.push_back({{"fold", "held-out fold index or \"all\""},
               kRun,
               [](const ExperimentConfig& c) { return c.fold < 0 ? json("all") : json(c.fold); },
               [](ExperimentConfig& c, const json& v) {
                 if (v.is_string()) {
                   c.fold = parse_fold(v.get<std::string>());
                 } else {
                   c.fold = read_as<int>("fold", v);
                   if (c.fold < 0) throw ConfigError("fold must be non-negative or \"all\"");
                 }
               }});
  e.push_back(field<std::string>("method", "label of the run in reports, empty for the variant name", kRun,
                                 [](ExperimentConfig& c) -> auto& { return c.method; }));
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = build_entries();
  return table;
}

json dump_groups(const ExperimentConfig& c, unsigned groups) {
  json j = json::object();
  for (const auto& e : entries()) {
    if (e.groups & groups) j[e.key.name] = e.get(c);
  }
  return j;
}

ExperimentConfig apply_groups(ExperimentConfig base, const json& j, unsigned groups) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [name, value] : j.items()) {
    const auto it = std::find_if(entries().begin(), entries().end(), [&](const Entry& e) { return e.key.name == name; });
    if (it == entries().end()) throw ConfigError("unknown config key '" + name + "'");
    if (!(it->groups & groups)) continue;
    try {
      it->set(base, value);
    } catch (const json::exception& ex) {
      throw ConfigError("config key '" + name + "': " + ex.what());
    }
  }
  return base;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

json to_json(const ExperimentConfig& config) { return dump_groups(config, kSynth | kNetwork | kTrain | kRun); }

ExperimentConfig apply_json(ExperimentConfig base, const json& j) {
  return apply_groups(std::move(base), j, kSynth | kNetwork | kTrain | kRun);
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + ex.what());
  }
  return apply_json(ExperimentConfig{}, j);
}

void write_config_file(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json(config).dump(2) << '\n';
}

json to_json(const NetworkConfig& config) {
  ExperimentConfig c;
  c.network = config;
  return dump_groups(c, kNetwork);
}

json to_json(const TrainConfig& config) {
  ExperimentConfig c;
  c.train = config;
  return dump_groups(c, kTrain);
}

NetworkConfig network_config_from_json(const json& j) { return apply_groups(ExperimentConfig{}, j, kNetwork).network; }

TrainConfig train_config_from_json(const json& j) { return apply_groups(ExperimentConfig{}, j, kTrain).train; }

}  // namespace biuda
