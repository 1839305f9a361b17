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

#include "experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "errors.hpp"

namespace biuda {

namespace fs = std::filesystem;

namespace {

std::vector<ImageSample> select(const DatasetBundle& bundle, DomainId domain, int fold, bool in_fold) {
  if (fold < 0) throw ConfigError("a concrete fold index is required here");
  if (!bundle.manifest.folds.empty()) {
    const int max_fold = std::max_element(bundle.manifest.folds.begin(), bundle.manifest.folds.end(),
                                          [](auto a, auto b) { return a.second < b.second; })
                             ->second;
    if (fold > max_fold) throw ConfigError("fold " + std::to_string(fold) + " does not exist in the dataset");
  }
  std::vector<ImageSample> out;
  for (auto& s : bundle.domain_samples(domain)) {
    if ((bundle.fold_of(s.case_id) == fold) == in_fold) out.push_back(std::move(s));
  }
  return out;
}

DomainId source_of(Direction d) { return d == Direction::kBackward ? DomainId::target() : DomainId::source(); }

std::vector<Direction> expand(Direction d) {
  if (d == Direction::kBoth) return {Direction::kForward, Direction::kBackward};
  return {d};
}

std::vector<int> folds_of(const ExperimentConfig& c) {
  if (c.fold >= 0) return {c.fold};
  std::vector<int> all;
  for (int f = 0; f < c.synth.folds; ++f) all.push_back(f);
  return all;
}

fs::path fold_dir(const fs::path& run_dir, const ExperimentConfig& c, int fold) {
  return c.fold < 0 ? run_dir / ("fold" + std::to_string(fold)) : run_dir;
}

DatasetBundle load_checked(const ExperimentConfig& c) {
  auto bundle = load_dataset(c.data);
  if (bundle.manifest.image_size != c.network.image_size) {
    throw ConfigError("dataset '" + c.data + "' has image size " + std::to_string(bundle.manifest.image_size) +
                      " but the configuration asks for " + std::to_string(c.network.image_size));
  }
  if (bundle.manifest.num_classes() != c.network.num_classes) {
    throw ConfigError("dataset '" + c.data + "' has " + std::to_string(bundle.manifest.num_classes()) +
                      " classes but the configuration asks for " + std::to_string(c.network.num_classes));
  }
  return bundle;
}

}  // namespace

SampleSet training_set(const DatasetBundle& bundle, DomainId domain, int held_out) {
  return SampleSet(select(bundle, domain, held_out, false), domain);
}

std::vector<ImageSample> held_out_samples(const DatasetBundle& bundle, DomainId domain, int fold) {
  return select(bundle, domain, fold, true);
}

EvalSet predict(const fs::path& checkpoint, const DatasetBundle& bundle, DomainId domain, int fold) {
  auto params = load_inference_params(checkpoint);
  if (params->config().num_classes != bundle.manifest.num_classes()) {
    throw ConfigError("checkpoint '" + checkpoint.string() + "' predicts " +
                      std::to_string(params->config().num_classes) + " classes but the dataset has " +
                      std::to_string(bundle.manifest.num_classes()));
  }
  const auto samples = held_out_samples(bundle, domain, fold);
  EvalSet set;
  constexpr std::size_t kChunk = 32;
  for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
    std::vector<const Image*> images;
    for (std::size_t i = begin; i < std::min(samples.size(), begin + kChunk); ++i) images.push_back(&samples[i].image);
    auto masks = infer(params, images);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const auto& s = samples[begin + i];
      if (!s.mask) {
        throw ConfigError("evaluation sample case" + std::to_string(s.case_id) + "_slice" +
                          std::to_string(s.slice_id) + " has no ground-truth mask");
      }
      set.predictions.push_back(std::move(masks[i]));
      set.references.push_back(*s.mask);
      set.case_ids.push_back(s.case_id);
    }
  }
  return set;
}

MetricsTable evaluate(const fs::path& checkpoint, const DatasetBundle& bundle, DomainId domain, int fold,
                      const std::string& method, const std::string& direction) {
  return score(predict(checkpoint, bundle, domain, fold), bundle.manifest.classes, method, direction);
}

std::string method_name(const ExperimentConfig& c) {
  return c.method.empty() ? std::string(to_string(c.train.variant)) : c.method;
}

fs::path uda_run_dir(const ExperimentConfig& c, Direction d) {
  if (d == Direction::kBoth) throw ConfigError("a run directory needs a single direction");
  return fs::path(c.out) / (std::string(to_string(d)) + "_" + method_name(c));
}

fs::path upper_run_dir(const ExperimentConfig& c, DomainId domain) {
  return fs::path(c.out) / ("upper_domain" + std::to_string(domain.value()));
}

void run_synth(const ExperimentConfig& c) {
  c.synth.validate();
  save_dataset(synth_dataset(c.synth), c.data);
}

void run_train(const ExperimentConfig& config) {
  config.validate();
  const auto bundle = load_checked(config);
  for (const auto direction : expand(config.direction)) {
    ExperimentConfig c = config;
    c.direction = direction;
    const auto run_dir = uda_run_dir(c, direction);
    fs::create_directories(run_dir);
    write_config_file(c, run_dir / kConfigFile);
    for (const int fold : folds_of(c)) {
      const auto dir = fold_dir(run_dir, c, fold);
      fs::create_directories(dir);
      ExperimentConfig fc = c;
      fc.fold = fold;
      write_config_file(fc, dir / kConfigFile);
      const auto src = source_of(direction);
      const auto source = training_set(bundle, src, fold);
      auto target = training_set(bundle, src.other(), fold);
      target.arm_mask_guard(true);
      train(c.network, c.train, source, target, {dir / kCheckpointFile, dir / kCurveFile, nullptr});
    }
  }
}

void run_train_upper(const ExperimentConfig& config, int domain) {
  config.validate();
  const auto bundle = load_checked(config);
  std::vector<DomainId> domains;
  if (domain < 0) {
    domains = {DomainId::source(), DomainId::target()};
  } else {
    domains = {DomainId(domain)};
  }
  TrainConfig tc = config.train;
  tc.iterations = config.upper_iterations;
  tc.variant = Variant::kSourceOnly;
  for (const auto d : domains) {
    const auto run_dir = upper_run_dir(config, d);
    fs::create_directories(run_dir);
    write_config_file(config, run_dir / kConfigFile);
    for (const int fold : folds_of(config)) {
      const auto dir = fold_dir(run_dir, config, fold);
      fs::create_directories(dir);
      ExperimentConfig fc = config;
      fc.fold = fold;
      write_config_file(fc, dir / kConfigFile);
      const auto labeled = training_set(bundle, d, fold);
      if (!labeled.has_masks()) {
        throw ConfigError("upper bound for domain " + std::to_string(d.value()) + " needs masks for every sample");
      }
      train_upper_bound(config.network, tc, labeled, {dir / kCheckpointFile, dir / kCurveFile, nullptr});
    }
  }
}

namespace {

struct FoundRun {
  fs::path dir;
  ExperimentConfig config;
  bool upper = false;
  DomainId domain;  // domain scored
  std::string method, direction;
};

int ladder_rank(const FoundRun& r) {
  if (r.upper) return -1;
  for (std::size_t i = 0; i < std::size(kAllVariants); ++i) {
    if (kAllVariants[i] == r.config.train.variant) return static_cast<int>(i);
  }
  return static_cast<int>(std::size(kAllVariants));
}

std::vector<FoundRun> discover(const ExperimentConfig& c) {
  std::vector<FoundRun> runs;
  if (!fs::is_directory(c.out)) throw ConfigError("output directory '" + c.out + "' does not exist");
  for (const auto& entry : fs::directory_iterator(c.out)) {
    const auto cfg_path = entry.path() / kConfigFile;
    if (!entry.is_directory() || !fs::exists(cfg_path)) continue;
    FoundRun r;
    r.dir = entry.path();
    r.config = load_config_file(cfg_path);
    const auto name = entry.path().filename().string();
    if (name == "upper_domain0" || name == "upper_domain1") {
      r.upper = true;
      r.domain = DomainId(name.back() - '0');
      r.method = r.domain == DomainId::source() ? kSourceBound : kTargetBound;
      r.direction = r.method;
    } else {
      if (r.config.direction == Direction::kBoth) throw ConfigError("run '" + name + "' records direction 'both'");
      r.domain = source_of(r.config.direction).other();
      r.method = method_name(r.config);
      r.direction = std::string(to_string(r.config.direction));
    }
    runs.push_back(std::move(r));
  }
  std::sort(runs.begin(), runs.end(), [](const FoundRun& a, const FoundRun& b) {
    const int ra = ladder_rank(a), rb = ladder_rank(b);
    if (ra != rb) return ra < rb;
    if (a.method != b.method) return a.method < b.method;
    return a.direction > b.direction;  // forward before backward
  });
  return runs;
}

}  // namespace

MetricsTable run_eval(const ExperimentConfig& c) {
  const auto bundle = load_checked(c);
  const auto runs = discover(c);
  if (runs.empty()) throw ConfigError("no run directories with " + std::string(kConfigFile) + " under '" + c.out + "'");
  MetricsTable table;
  for (const auto& r : runs) {
    EvalSet pooled;
    for (const int fold : folds_of(r.config)) {
      const auto ckpt = fold_dir(r.dir, r.config, fold) / kCheckpointFile;
      pooled.append(predict(ckpt, bundle, r.domain, fold));
    }
    auto rows = score(pooled, bundle.manifest.classes, r.method, r.direction);
    table.insert(table.end(), rows.begin(), rows.end());
  }
  write_metrics_csv(table, fs::path(c.out) / kMetricsFile);
  return table;
}

ReportFiles run_report(const ExperimentConfig& c) {
  const auto path = fs::path(c.out) / kMetricsFile;
  if (!fs::exists(path)) throw ConfigError("'" + path.string() + "' not found; run eval first");
  return write_report(read_metrics_csv(path), fs::path(c.out) / kReportDir);
}

ReportFiles run_repro(const ExperimentConfig& config) {
  config.validate();
  run_synth(config);
  run_train_upper(config, -1);
  ExperimentConfig c = config;
  c.direction = Direction::kBoth;
  c.method.clear();
  for (const auto v : kAllVariants) {
    c.train.variant = v;
    run_train(c);
  }
  run_eval(config);
  return run_report(config);
}

}  // namespace biuda
