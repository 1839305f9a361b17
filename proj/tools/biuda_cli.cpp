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

// Command-line front end. Links only the C API.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biuda/biuda.h"

namespace {

struct Options {
  std::string config;
  std::optional<long long> seed;
  std::optional<long long> data_seed;
  std::string out;
  std::string data;
  std::string direction;
  std::string variant;
  std::string fold;
  std::optional<int> image_size;
  std::optional<long long> iterations;
  std::vector<std::string> sets;
  std::string domain = "both";
};

class Config {
 public:
  Config() {
    if (biuda_config_new(&handle_) != BIUDA_OK) throw std::runtime_error(biuda_last_error());
  }
  ~Config() { biuda_config_free(handle_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  biuda_config* get() const { return handle_; }

 private:
  biuda_config* handle_ = nullptr;
};

int report_failure(biuda_status status) {
  std::cerr << "error: " << biuda_last_error() << '\n';
  return biuda_exit_code(status);
}

// Applies file, then flags, then --set overrides. seed_key decides where
// --seed lands; out_key where --out lands.
biuda_status resolve(const Options& o, biuda_config* cfg, const char* seed_key, const char* out_key) {
  biuda_status s = BIUDA_OK;
  const auto set = [&](const char* key, const std::string& text) {
    if (s == BIUDA_OK) s = biuda_config_set(cfg, key, text.c_str());
  };
  if (!o.config.empty()) s = biuda_config_load_file(cfg, o.config.c_str());
  if (o.seed) set(seed_key, std::to_string(*o.seed));
  if (o.data_seed) set("data_seed", std::to_string(*o.data_seed));
  if (!o.out.empty()) set(out_key, o.out);
  if (!o.data.empty()) set("data", o.data);
  if (!o.direction.empty()) set("direction", o.direction);
  if (!o.variant.empty()) set("variant", o.variant);
  if (!o.fold.empty()) set("fold", o.fold);
  if (o.image_size) set("image_size", std::to_string(*o.image_size));
  if (o.iterations) set("iterations", std::to_string(*o.iterations));
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      return BIUDA_ERR_CONFIG;
    }
    set(kv.substr(0, eq).c_str(), kv.substr(eq + 1));
  }
  if (s == BIUDA_OK) s = biuda_config_validate(cfg);
  return s;
}

void add_common(CLI::App* cmd, Options& o, bool out_required) {
  cmd->add_option("--config", o.config, "JSON file of flat configuration keys")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "random seed");
  auto* out = cmd->add_option("--out", o.out, "output directory");
  if (out_required) out->required();
  cmd->add_option("--image-size", o.image_size, "square image side in pixels");
  cmd->add_option("--set", o.sets, "override any configuration key: key=value (repeatable)");
}

void add_run_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "dataset root");
  cmd->add_option("--direction", o.direction, "forward, backward or both");
  cmd->add_option("--variant", o.variant, "source_only, drpl, drpl_cpc, drpl_cpc_lc or full");
  cmd->add_option("--fold", o.fold, "held-out fold index or 'all'");
  cmd->add_option("--iterations", o.iterations, "training iterations");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional unsupervised domain adaptation for segmentation"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(biuda_version()));
  Options o;

  auto* synth = app.add_subcommand("synth", "generate the two-domain synthetic dataset");
  add_common(synth, o, true);
  auto* train = app.add_subcommand("train", "unsupervised adaptation for one or both directions");
  add_common(train, o, false);
  add_run_options(train, o);
  auto* upper = app.add_subcommand("train-upper", "supervised upper bounds on each domain");
  add_common(upper, o, false);
  add_run_options(upper, o);
  upper->add_option("--domain", o.domain, "0, 1 or both")->check(CLI::IsMember({"0", "1", "both"}));
  auto* eval = app.add_subcommand("eval", "score every run under --out into metrics.csv");
  add_common(eval, o, false);
  add_run_options(eval, o);
  auto* report = app.add_subcommand("report", "drop tables and chart from metrics.csv");
  add_common(report, o, false);
  add_run_options(report, o);
  auto* repro = app.add_subcommand("repro", "synth, upper bounds, all variants both ways, eval and report");
  add_common(repro, o, false);
  add_run_options(repro, o);
  repro->add_option("--data-seed", o.data_seed, "seed of the synthetic dataset");
  auto* keys = app.add_subcommand("keys", "list configuration keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (keys->parsed()) {
    for (std::size_t i = 0; i < biuda_config_key_count(); ++i) {
      std::printf("%-26s %s\n", biuda_config_key_name(i), biuda_config_key_help(i));
    }
    return 0;
  }

  Config cfg;
  const bool is_synth = synth->parsed();
  biuda_status s = resolve(o, cfg.get(), is_synth ? "data_seed" : "seed", is_synth ? "data" : "out");
  if (s != BIUDA_OK) {
    if (std::string(biuda_last_error()).empty()) return biuda_exit_code(s);
    return report_failure(s);
  }

  if (is_synth) {
    s = biuda_run_synth(cfg.get());
  } else if (train->parsed()) {
    s = biuda_run_train(cfg.get());
  } else if (upper->parsed()) {
    s = biuda_run_train_upper(cfg.get(), o.domain == "both" ? -1 : std::stoi(o.domain));
  } else if (eval->parsed()) {
    s = biuda_run_eval(cfg.get());
  } else if (report->parsed()) {
    s = biuda_run_report(cfg.get());
  } else if (repro->parsed()) {
    s = biuda_run_repro(cfg.get());
  }
  if (s != BIUDA_OK) return report_failure(s);
  return 0;
}
