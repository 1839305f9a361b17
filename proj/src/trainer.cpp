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

#include "trainer.hpp"

#include <cmath>
#include <cstdlib>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "config_io.hpp"
#include "errors.hpp"

namespace biuda {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kSourceOnly: return "source_only";
    case Variant::kDrpl: return "drpl";
    case Variant::kDrplCpc: return "drpl_cpc";
    case Variant::kDrplCpcLc: return "drpl_cpc_lc";
    case Variant::kFull: return "full";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected source_only, drpl, drpl_cpc, drpl_cpc_lc or full)");
}

VariantTerms terms_for(Variant v) {
  switch (v) {
    case Variant::kSourceOnly: return {false, false, false, false};
    case Variant::kDrpl: return {true, false, false, false};
    case Variant::kDrplCpc: return {true, true, false, false};
    case Variant::kDrplCpcLc: return {true, true, true, false};
    case Variant::kFull: return {true, true, true, true};
  }
  return {};
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (lr_content <= 0 || lr_pattern <= 0 || lr_generator <= 0 || lr_discriminator <= 0) {
    throw ConfigError("learning rates must be positive");
  }
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
  if (poly_power <= 0) throw ConfigError("poly_power must be positive");
  if (checkpoint_every < 0 || log_every < 0) throw ConfigError("checkpoint_every/log_every must be non-negative");
  weights.validate();
}

double poly_decay(double lr0, long iter, long max_iter, double power) {
  if (max_iter <= 0 || iter >= max_iter) return 0.0;
  if (iter <= 0) return lr0;
  return lr0 * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

// ---------------------------------------------------------------------------
// Data access
// ---------------------------------------------------------------------------

SampleSet::SampleSet(std::vector<ImageSample> samples, DomainId domain) : samples_(std::move(samples)), domain_(domain) {
  for (const auto& s : samples_) {
    if (s.domain != domain_) {
      throw ConfigError("sample case" + std::to_string(s.case_id) + "_slice" + std::to_string(s.slice_id) +
                        " is from domain " + std::to_string(s.domain.value()) + ", expected " +
                        std::to_string(domain_.value()));
    }
  }
}

SampleSet::SampleSet(const SampleSet& other)
    : samples_(other.samples_), domain_(other.domain_), guard_armed_(other.guard_armed_) {}

bool SampleSet::has_masks() const {
  return std::all_of(samples_.begin(), samples_.end(), [](const ImageSample& s) { return s.mask.has_value(); });
}

const Mask& SampleSet::mask(std::size_t i) const {
  if (guard_armed_) throw ConfigError("mask read on a guarded sample set (domain " + std::to_string(domain_.value()) + ")");
  mask_reads_.fetch_add(1);
  const auto& s = samples_.at(i);
  if (!s.mask) throw ConfigError("sample case" + std::to_string(s.case_id) + "_slice" + std::to_string(s.slice_id) +
                                 " has no mask");
  return *s.mask;
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word.
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Batch make_batch(const SampleSet& set, int batch_size, std::uint64_t seed, int stream, long k, bool labeled,
                 bool augment_batch) {
  if (set.size() == 0) throw ConfigError("cannot draw batches from an empty sample set");
  std::mt19937_64 rng(mix(mix(seed, static_cast<std::uint64_t>(stream)), static_cast<std::uint64_t>(k)));
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  const int size = set.image(0).height;

  Batch batch;
  batch.images = torch::empty({batch_size, 1, size, size}, torch::kFloat32);
  if (labeled) batch.labels = torch::empty({batch_size, size, size}, torch::kLong);
  auto images = batch.images.accessor<float, 4>();
  for (int b = 0; b < batch_size; ++b) {
    const auto index = pick(rng);
    ImageSample sample;
    sample.image = set.image(index);
    if (labeled) sample.mask = set.mask(index);
    if (augment_batch) sample = augment(sample, rng);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) images[b][0][y][x] = sample.image.at(y, x);
    }
    if (labeled) {
      auto labels = batch.labels.accessor<int64_t, 3>();
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) labels[b][y][x] = sample.mask->at(y, x);
      }
    }
  }
  return batch;
}

bool deterministic_loading_forced() {
  const char* v = std::getenv("BIUDA_DETERMINISTIC");
  return v != nullptr && std::string_view(v) == "1";
}

struct BatchStream::Impl {
  const SampleSet& set;
  int batch_size;
  std::uint64_t seed;
  int stream;
  bool labeled;
  bool augment;
  long next_index;
  bool prefetch;
  std::future<Batch> pending;

  Batch build(long k) const { return make_batch(set, batch_size, seed, stream, k, labeled, augment); }
  void launch() {
    const long k = next_index;
    pending = std::async(std::launch::async, [this, k] { return build(k); });
  }
};

BatchStream::BatchStream(const SampleSet& set, int batch_size, std::uint64_t seed, int stream, bool labeled,
                         bool augment, long first)
    : impl_(new Impl{set, batch_size, seed, stream, labeled, augment, first, !deterministic_loading_forced(), {}}) {
  if (impl_->prefetch) impl_->launch();
}

BatchStream::~BatchStream() {
  if (impl_ && impl_->pending.valid()) impl_->pending.wait();
}

Batch BatchStream::next() {
  Batch batch = impl_->prefetch ? impl_->pending.get() : impl_->build(impl_->next_index);
  ++impl_->next_index;
  if (impl_->prefetch) impl_->launch();
  return batch;
}

// ---------------------------------------------------------------------------
// State and steps
// ---------------------------------------------------------------------------

std::array<std::optional<double>, 4> TrainState::learning_rates() const {
  auto lr = [](const auto& opt) -> std::optional<double> {
    if (!opt) return std::nullopt;
    return opt->param_groups().front().options().get_lr();
  };
  return {lr(content_opt), lr(pattern_opt), lr(generator_opt), lr(discriminator_opt)};
}

TrainState make_train_state(const NetworkConfig& net, const TrainConfig& train) {
  train.validate();
  NetworkConfig cfg = net;
  const auto terms = terms_for(train.variant);
  cfg.unified_pattern_encoder = terms.unified_encoder;

  TrainState state;
  state.config = train;
  state.params = init_params(cfg, train.seed);
  state.params->train();
  state.content_opt = std::make_unique<torch::optim::SGD>(
      state.params->content_parameters(), torch::optim::SGDOptions(train.lr_content).momentum(train.momentum));
  if (terms.translation) {
    const auto adam = [&](double lr) {
      return torch::optim::AdamOptions(lr).betas({train.adam_beta1, train.adam_beta2});
    };
    std::vector<torch::Tensor> pattern_params;
    for (auto& enc : state.params->pattern_encoders) {
      for (auto& p : enc->parameters()) pattern_params.push_back(p);
    }
    state.pattern_opt = std::make_unique<torch::optim::Adam>(pattern_params, adam(train.lr_pattern));
    state.generator_opt =
        std::make_unique<torch::optim::Adam>(state.params->generator->parameters(), adam(train.lr_generator));
    state.discriminator_opt =
        std::make_unique<torch::optim::Adam>(state.params->discriminator_parameters(), adam(train.lr_discriminator));
  }
  return state;
}

namespace {

void set_lr(torch::optim::Optimizer* opt, double lr) {
  if (opt == nullptr) return;
  for (auto& group : opt->param_groups()) group.options().set_lr(lr);
}

void set_requires_grad(const std::vector<torch::Tensor>& params, bool flag) {
  for (auto p : params) p.requires_grad_(flag);
}

double checked(const torch::Tensor& t, const char* name, long iteration) {
  const double v = t.item<double>();
  if (!std::isfinite(v)) throw NumericalError(name, iteration);
  return v;
}

std::vector<DomainId> domain_labels(int64_t n_source, int64_t n_target) {
  std::vector<DomainId> ids(static_cast<std::size_t>(n_source), DomainId::source());
  ids.insert(ids.end(), static_cast<std::size_t>(n_target), DomainId::target());
  return ids;
}

}  // namespace

LossReport generator_phase(TrainState& state, const Batch& source, const torch::Tensor& target_images,
                           Recomposition* recomposed) {
  auto& params = state.params;
  const auto& cfg = state.config;
  const auto terms = terms_for(cfg.variant);
  const long it = state.iteration;
  const auto& w = cfg.weights;
  const int k = params->config().num_classes;
  const auto labels = one_hot(source.labels, k);
  params->train();

  LossReport report;
  LossTerms t;
  if (!terms.translation) {
    auto c_s = content_encode(params, source.images);
    t.lc = seg_loss(labels, segment(params, c_s), w);
    report.lc = checked(t.lc, "lc", it);
  } else {
    set_requires_grad(params->discriminator_parameters(), false);
    const auto n = source.images.size(0);
    const auto& x_s = source.images;
    const auto& x_t = target_images;

    // Decompose both domains in shared passes.
    const auto both = torch::cat({x_s, x_t});
    const auto c = content_encode(params, both).tensor;
    const auto p = pattern_encode(params, both, domain_labels(n, x_t.size(0))).tensor;
    const auto c_s = c.narrow(0, 0, n), c_t = c.narrow(0, n, x_t.size(0));
    const auto p_s = p.narrow(0, 0, n), p_t = p.narrow(0, n, x_t.size(0));

    // Recompose: x_s_hat, x_t_hat, x_s2t, x_t2s with one generator.
    const auto recon = generate(params, {torch::cat({c_s, c_t, c_s, c_t})}, {torch::cat({p_s, p_t, p_t, p_s})});
    const auto x_s_hat = recon.narrow(0, 0, n);
    const auto x_t_hat = recon.narrow(0, n, n);
    const auto x_s2t = recon.narrow(0, 2 * n, n);
    const auto x_t2s = recon.narrow(0, 3 * n, n);

    const auto m_s = segment(params, {c_s});
    t.cycle_s = cycle_loss(x_s, x_s_hat);
    t.cycle_t = cycle_loss(x_t, x_t_hat);
    t.gan_s2t = gan_loss_g(discriminate(params, x_s2t, DomainId::target()), w);
    t.gan_t2s = gan_loss_g(discriminate(params, x_t2s, DomainId::source()), w);

    // Re-encode reconstructions (and the s2t translation for the label
    // consistency term) in one content pass.
    std::vector<torch::Tensor> reencode;
    if (terms.cpc) {
      reencode.push_back(x_s_hat);
      reencode.push_back(x_t_hat);
    }
    if (terms.lc) reencode.push_back(x_s2t);
    torch::Tensor c_hat;
    if (!reencode.empty()) c_hat = content_encode(params, torch::cat(reencode)).tensor;

    if (terms.cpc) {
      const auto recon_both = torch::cat({x_s_hat, x_t_hat});
      const auto p_hat = pattern_encode(params, recon_both, domain_labels(n, n)).tensor;
      t.cpc_s = cpc_loss(c_s, c_hat.narrow(0, 0, n), p_s, p_hat.narrow(0, 0, n));
      t.cpc_t = cpc_loss(c_t, c_hat.narrow(0, n, n), p_t, p_hat.narrow(0, n, n));
    }
    if (terms.lc) {
      const auto m_s_hat = segment(params, {c_hat.narrow(0, c_hat.size(0) - n, n)});
      t.lc = lc_loss(labels, m_s, m_s_hat, w);
    } else {
      t.lc = seg_loss(labels, m_s, w);
    }

    report.lc = checked(t.lc, "lc", it);
    report.cycle_s = checked(t.cycle_s, "cycle_s", it);
    report.cycle_t = checked(t.cycle_t, "cycle_t", it);
    report.gan_s2t = checked(t.gan_s2t, "gan_s2t", it);
    report.gan_t2s = checked(t.gan_t2s, "gan_t2s", it);
    if (terms.cpc) {
      report.cpc_s = checked(t.cpc_s, "cpc_s", it);
      report.cpc_t = checked(t.cpc_t, "cpc_t", it);
    }
    if (recomposed != nullptr) *recomposed = {x_s, x_t, x_s2t.detach(), x_t2s.detach()};
  }

  const auto total = total_loss(t, w);
  report.total = checked(total, "total", it);
  state.content_opt->zero_grad();
  if (state.pattern_opt) state.pattern_opt->zero_grad();
  if (state.generator_opt) state.generator_opt->zero_grad();
  total.backward();
  state.content_opt->step();
  if (terms.translation) {
    state.pattern_opt->step();
    state.generator_opt->step();
    set_requires_grad(params->discriminator_parameters(), true);
  }
  return report;
}

double discriminator_phase(TrainState& state, const Recomposition& r) {
  if (!state.discriminator_opt) throw ConfigError("variant has no discriminator");
  auto& params = state.params;
  const auto& w = state.config.weights;
  const auto loss = gan_loss_d(discriminate(params, r.target, DomainId::target()),
                               discriminate(params, r.source_to_target.detach(), DomainId::target()), w) +
                    gan_loss_d(discriminate(params, r.source, DomainId::source()),
                               discriminate(params, r.target_to_source.detach(), DomainId::source()), w);
  const double value = checked(loss, "d_loss", state.iteration);
  state.discriminator_opt->zero_grad();
  loss.backward();
  state.discriminator_opt->step();
  return value;
}

LossReport train_step(TrainState& state, const Batch& source, const torch::Tensor& target_images) {
  const auto& cfg = state.config;
  const long it = state.iteration;
  set_lr(state.content_opt.get(), poly_decay(cfg.lr_content, it, cfg.iterations, cfg.poly_power));
  set_lr(state.pattern_opt.get(), poly_decay(cfg.lr_pattern, it, cfg.iterations, cfg.poly_power));
  set_lr(state.generator_opt.get(), poly_decay(cfg.lr_generator, it, cfg.iterations, cfg.poly_power));
  set_lr(state.discriminator_opt.get(), poly_decay(cfg.lr_discriminator, it, cfg.iterations, cfg.poly_power));

  Recomposition recomposed;
  auto report = generator_phase(state, source, target_images, &recomposed);
  if (terms_for(cfg.variant).translation) report.d_loss = discriminator_phase(state, recomposed);
  ++state.iteration;
  return report;
}

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

TrainingLog::TrainingLog(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw IoError("cannot write training log '" + path.string() + "'");
  if (!append) out_ << header() << '\n';
}

std::string TrainingLog::header() {
  return "iteration,cpc_s,cpc_t,lc,cycle_s,cycle_t,gan_s2t,gan_t2s,total,d_loss,lr_Ec,lr_Ep,lr_G,lr_D";
}

void TrainingLog::write(long iteration, const LossReport& report, const std::array<std::optional<double>, 4>& lrs) {
  out_ << iteration;
  out_ << std::setprecision(9);
  for (const auto& [name, value] : report.fields()) {
    out_ << ',';
    if (value) out_ << *value;
  }
  for (const auto& lr : lrs) {
    out_ << ',';
    if (lr) out_ << *lr;
  }
  out_ << '\n';
  out_.flush();
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

namespace {

constexpr int kSourceStream = 0;
constexpr int kTargetStream = 1;

void run_loop(TrainState& state, const SampleSet& source, const SampleSet* target, const TrainOutputs& outputs,
              bool resumed) {
  const auto& cfg = state.config;
  std::optional<TrainingLog> log;
  if (outputs.curve_csv) log.emplace(*outputs.curve_csv, resumed);
  BatchStream source_stream(source, cfg.batch_size, cfg.seed, kSourceStream, true, cfg.augment, state.iteration);
  std::optional<BatchStream> target_stream;
  if (target != nullptr) {
    target_stream.emplace(*target, cfg.batch_size, cfg.seed, kTargetStream, false, cfg.augment, state.iteration);
  }
  while (state.iteration < cfg.iterations) {
    const long it = state.iteration;
    const auto batch_s = source_stream.next();
    const auto batch_t = target_stream ? target_stream->next().images : torch::Tensor();
    const auto report = train_step(state, batch_s, batch_t);
    if (log) log->write(it, report, state.learning_rates());
    if (outputs.on_step) outputs.on_step(it, report);
    if (cfg.log_every > 0 && (it % cfg.log_every == 0 || it + 1 == cfg.iterations)) {
      std::clog << "[" << to_string(cfg.variant) << "] iter " << it << " total " << report.total;
      if (report.d_loss) std::clog << " d_loss " << *report.d_loss;
      std::clog << '\n';
    }
    if (outputs.checkpoint && cfg.checkpoint_every > 0 && state.iteration % cfg.checkpoint_every == 0 &&
        state.iteration < cfg.iterations) {
      save_checkpoint(state, *outputs.checkpoint);
    }
  }
  if (outputs.checkpoint) save_checkpoint(state, *outputs.checkpoint);
}

}  // namespace

TrainState train(const NetworkConfig& net, const TrainConfig& config, const SampleSet& source,
                 const SampleSet& target, const TrainOutputs& outputs, TrainState* resume) {
  if (source.domain() == target.domain()) throw ConfigError("source and target sets come from the same domain");
  if (!source.has_masks()) throw ConfigError("source domain samples must all carry masks");
  if (source.size() == 0 || target.size() == 0) throw ConfigError("empty training set");
  if (source.image(0).height != net.image_size) {
    throw ShapeError("dataset image size " + std::to_string(source.image(0).height) + " does not match network size " +
                     std::to_string(net.image_size));
  }
  TrainState state = resume != nullptr ? std::move(*resume) : make_train_state(net, config);
  run_loop(state, source, terms_for(config.variant).translation ? &target : nullptr, outputs, resume != nullptr);
  return state;
}

TrainState train_upper_bound(const NetworkConfig& net, const TrainConfig& config, const SampleSet& labeled,
                             const TrainOutputs& outputs) {
  if (!labeled.has_masks()) throw ConfigError("upper-bound training needs masks for every sample");
  if (labeled.size() == 0) throw ConfigError("empty training set");
  TrainConfig cfg = config;
  cfg.variant = Variant::kSourceOnly;
  TrainState state = make_train_state(net, cfg);
  run_loop(state, labeled, nullptr, outputs, false);
  return state;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

std::vector<Mask> infer(Params& params, std::span<const Image* const> images) {
  torch::NoGradGuard no_grad;
  params->content_encoder->eval();
  params->segmenter->eval();
  const auto batch = to_batch(images);
  const auto labels = segment(params, content_encode(params, batch)).argmax(1).to(torch::kUInt8).contiguous();
  const auto acc = labels.accessor<std::uint8_t, 3>();
  std::vector<Mask> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    Mask m(images[i]->height, images[i]->width);
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) m.at(y, x) = acc[i][y][x];
    }
    out.push_back(std::move(m));
  }
  return out;
}

Mask infer(Params& params, const Image& image) {
  const Image* one[] = {&image};
  return infer(params, std::span<const Image* const>(one)).front();
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::uint64_t hash_tensors(const std::vector<torch::Tensor>& tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tensors) {
    const auto c = t.detach().contiguous().cpu();
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    const auto n = c.numel() * c.element_size();
    for (int64_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace {

void collect(const torch::nn::Module& m, std::vector<torch::Tensor>& out) {
  for (const auto& p : m.parameters()) out.push_back(p);
  for (const auto& b : m.buffers()) out.push_back(b);
}

}  // namespace

std::uint64_t discriminator_hash(Params& params) {
  std::vector<torch::Tensor> ts;
  for (auto& d : params->discriminators) collect(*d, ts);
  return hash_tensors(ts);
}

std::uint64_t generator_side_hash(Params& params) {
  std::vector<torch::Tensor> ts;
  collect(*params->content_encoder, ts);
  collect(*params->segmenter, ts);
  for (auto& e : params->pattern_encoders) collect(*e, ts);
  if (params->generator) collect(*params->generator, ts);
  return hash_tensors(ts);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void write_string(torch::serialize::OutputArchive& archive, const std::string& key, const std::string& value) {
  archive.write(key, c10::IValue(value));
}

std::string read_string(torch::serialize::InputArchive& archive, const std::string& key) {
  c10::IValue v;
  if (!archive.try_read(key, v)) throw IoError("checkpoint lacks '" + key + "'");
  return v.toStringRef();
}

template <typename Opt>
void write_optimizer(torch::serialize::OutputArchive& archive, const std::string& key, const Opt& opt) {
  if (!opt) return;
  torch::serialize::OutputArchive sub;
  opt->save(sub);
  archive.write(key, sub);
}

template <typename Opt>
void read_optimizer(torch::serialize::InputArchive& archive, const std::string& key, Opt& opt) {
  if (!opt) return;
  torch::serialize::InputArchive sub;
  if (!archive.try_read(key, sub)) throw IoError("checkpoint lacks optimizer state '" + key + "'");
  opt->load(sub);
}

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint '" + path.string() + "' does not exist");
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw IoError("cannot read checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
  return archive;
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  torch::serialize::OutputArchive archive;
  write_string(archive, "network_config", to_json(state.params->config()).dump());
  write_string(archive, "train_config", to_json(state.config).dump());
  write_string(archive, "kind", "training");
  archive.write("iteration", torch::tensor(static_cast<int64_t>(state.iteration)));
  torch::serialize::OutputArchive nets;
  state.params->save(nets);
  archive.write("params", nets);
  write_optimizer(archive, "opt_content", state.content_opt);
  write_optimizer(archive, "opt_pattern", state.pattern_opt);
  write_optimizer(archive, "opt_generator", state.generator_opt);
  write_optimizer(archive, "opt_discriminator", state.discriminator_opt);
  const auto tmp = path.string() + ".tmp";
  try {
    archive.save_to(tmp);
  } catch (const c10::Error& e) {
    throw IoError("cannot write checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  auto archive = open_archive(path);
  if (read_string(archive, "kind") != "training") {
    throw IoError("'" + path.string() + "' is an inference-only checkpoint");
  }
  const auto net = network_config_from_json(nlohmann::json::parse(read_string(archive, "network_config")));
  const auto train = train_config_from_json(nlohmann::json::parse(read_string(archive, "train_config")));
  TrainState state = make_train_state(net, train);
  torch::Tensor iteration;
  archive.read("iteration", iteration);
  state.iteration = iteration.item<int64_t>();
  torch::serialize::InputArchive nets;
  archive.read("params", nets);
  state.params->load(nets);
  read_optimizer(archive, "opt_content", state.content_opt);
  read_optimizer(archive, "opt_pattern", state.pattern_opt);
  read_optimizer(archive, "opt_generator", state.generator_opt);
  read_optimizer(archive, "opt_discriminator", state.discriminator_opt);
  return state;
}

void save_inference_checkpoint(Params& params, const std::filesystem::path& path) {
  auto slim = init_params(params->config(), 0, /*inference_only=*/true);
  {
    torch::NoGradGuard no_grad;
    auto src_params = params->content_encoder->named_parameters();
    auto src_buffers = params->content_encoder->named_buffers();
    for (auto& item : slim->content_encoder->named_parameters()) item.value().copy_(src_params[item.key()]);
    for (auto& item : slim->content_encoder->named_buffers()) item.value().copy_(src_buffers[item.key()]);
    auto seg_params = params->segmenter->named_parameters();
    auto seg_buffers = params->segmenter->named_buffers();
    for (auto& item : slim->segmenter->named_parameters()) item.value().copy_(seg_params[item.key()]);
    for (auto& item : slim->segmenter->named_buffers()) item.value().copy_(seg_buffers[item.key()]);
  }
  torch::serialize::OutputArchive archive;
  write_string(archive, "network_config", to_json(params->config()).dump());
  write_string(archive, "kind", "inference");
  torch::serialize::OutputArchive nets;
  slim->save(nets);
  archive.write("params", nets);
  archive.save_to(path.string());
}

Params load_inference_params(const std::filesystem::path& path) {
  auto archive = open_archive(path);
  const auto kind = read_string(archive, "kind");
  const auto net = network_config_from_json(nlohmann::json::parse(read_string(archive, "network_config")));
  torch::serialize::InputArchive nets;
  archive.read("params", nets);
  auto params = init_params(net, 0, /*inference_only=*/true);
  if (kind == "inference") {
    params->load(nets);
  } else {
    // Full checkpoint: pick the E_c and S entries out of the stored networks.
    auto full = init_params(net, 0, false);
    full->load(nets);
    torch::NoGradGuard no_grad;
    auto src = full->named_parameters();
    auto src_buffers = full->named_buffers();
    for (auto& item : params->named_parameters()) item.value().copy_(src[item.key()]);
    for (auto& item : params->named_buffers()) item.value().copy_(src_buffers[item.key()]);
  }
  params->eval();
  return params;
}

}  // namespace biuda
