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

#include "biuda/biuda.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "config_io.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "trainer.hpp"

struct biuda_config {
  biuda::ExperimentConfig value;
};

struct biuda_dataset {
  biuda::DatasetBundle bundle;
  std::vector<biuda::ImageSample> domains[2];
};

struct biuda_model {
  biuda::Params params{nullptr};
};

namespace {

thread_local std::string last_error;

biuda_status fail(biuda_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename F>
biuda_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return BIUDA_OK;
  } catch (const biuda::NumericalError& e) {
    return fail(BIUDA_ERR_NUMERICAL, e.what());
  } catch (const biuda::ReportError& e) {
    return fail(BIUDA_ERR_REPORT, e.what());
  } catch (const biuda::IoError& e) {
    return fail(BIUDA_ERR_IO, e.what());
  } catch (const biuda::Error& e) {
    return fail(BIUDA_ERR_CONFIG, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(BIUDA_ERR_CONFIG, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(BIUDA_ERR_IO, e.what());
  } catch (const c10::Error& e) {
    return fail(BIUDA_ERR_INTERNAL, e.what_without_backtrace());
  } catch (const std::exception& e) {
    return fail(BIUDA_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BIUDA_ERR_INTERNAL, "unknown error");
  }
}

biuda_status null_arg(const char* name) { return fail(BIUDA_ERR_ARGUMENT, std::string(name) + " is null"); }

biuda_status copy_out(const std::string& text, char* buf, std::size_t size, std::size_t* needed) {
  if (needed != nullptr) *needed = text.size() + 1;
  if (buf == nullptr) return BIUDA_OK;
  if (size < text.size() + 1) return fail(BIUDA_ERR_ARGUMENT, "buffer too small");
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return BIUDA_OK;
}

biuda_status domain_arg(int domain) {
  if (domain != 0 && domain != 1) return fail(BIUDA_ERR_ARGUMENT, "domain must be 0 or 1");
  return BIUDA_OK;
}

}  // namespace

extern "C" {

const char* biuda_last_error(void) { return last_error.c_str(); }

const char* biuda_version(void) { return "1.0.0"; }

int biuda_exit_code(biuda_status status) {
  switch (status) {
    case BIUDA_OK: return 0;
    case BIUDA_ERR_NUMERICAL: return 3;
    case BIUDA_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

biuda_status biuda_config_new(biuda_config** out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] { *out = new biuda_config{}; });
}

void biuda_config_free(biuda_config* config) { delete config; }

biuda_status biuda_config_load_file(biuda_config* config, const char* path) {
  if (config == nullptr) return null_arg("config");
  if (path == nullptr) return null_arg("path");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw biuda::ConfigError(std::string("cannot open config file '") + path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw biuda::ConfigError(std::string("config file '") + path + "' is not valid JSON: " + e.what());
    }
    config->value = biuda::apply_json(config->value, j);
  });
}

biuda_status biuda_config_set_json(biuda_config* config, const char* key, const char* json_value) {
  if (config == nullptr) return null_arg("config");
  if (key == nullptr) return null_arg("key");
  if (json_value == nullptr) return null_arg("json_value");
  return guarded([&] {
    nlohmann::json v;
    try {
      v = nlohmann::json::parse(json_value);
    } catch (const nlohmann::json::exception&) {
      throw biuda::ConfigError(std::string("value of '") + key + "' is not valid JSON: " + json_value);
    }
    config->value = biuda::apply_json(config->value, nlohmann::json{{key, v}});
  });
}

biuda_status biuda_config_set(biuda_config* config, const char* key, const char* text) {
  if (config == nullptr) return null_arg("config");
  if (key == nullptr) return null_arg("key");
  if (text == nullptr) return null_arg("text");
  return guarded([&] {
    // Numbers, booleans and arrays parse as JSON; anything else is a string.
    nlohmann::json v = nlohmann::json::parse(text, nullptr, false);
    if (v.is_discarded() || v.is_object() || v.is_null() || v.is_string()) v = std::string(text);
    const auto current = biuda::to_json(config->value);
    if (current.contains(key) && current.at(key).is_string()) v = std::string(text);
    config->value = biuda::apply_json(config->value, nlohmann::json{{key, v}});
  });
}

biuda_status biuda_config_get(const biuda_config* config, const char* key, char* buf, size_t size, size_t* needed) {
  if (config == nullptr) return null_arg("config");
  std::string text;
  const auto status = guarded([&] {
    const auto j = biuda::to_json(config->value);
    if (key == nullptr) {
      text = j.dump(2);
    } else {
      if (!j.contains(key)) throw biuda::ConfigError(std::string("unknown config key '") + key + "'");
      text = j.at(key).dump();
    }
  });
  if (status != BIUDA_OK) return status;
  return copy_out(text, buf, size, needed);
}

biuda_status biuda_config_validate(const biuda_config* config) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { config->value.validate(); });
}

biuda_status biuda_config_write(const biuda_config* config, const char* path) {
  if (config == nullptr) return null_arg("config");
  if (path == nullptr) return null_arg("path");
  return guarded([&] { biuda::write_config_file(config->value, path); });
}

size_t biuda_config_key_count(void) { return biuda::config_keys().size(); }

const char* biuda_config_key_name(size_t i) {
  const auto& keys = biuda::config_keys();
  return i < keys.size() ? keys[i].name.c_str() : nullptr;
}

const char* biuda_config_key_help(size_t i) {
  const auto& keys = biuda::config_keys();
  return i < keys.size() ? keys[i].help.c_str() : nullptr;
}

biuda_status biuda_run_synth(const biuda_config* config) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { biuda::run_synth(config->value); });
}

biuda_status biuda_run_train(const biuda_config* config) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { biuda::run_train(config->value); });
}

biuda_status biuda_run_train_upper(const biuda_config* config, int domain) {
  if (config == nullptr) return null_arg("config");
  if (domain < -1 || domain > 1) return fail(BIUDA_ERR_ARGUMENT, "domain must be 0, 1 or -1");
  return guarded([&] { biuda::run_train_upper(config->value, domain); });
}

biuda_status biuda_run_eval(const biuda_config* config) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { biuda::run_eval(config->value); });
}

biuda_status biuda_run_report(const biuda_config* config) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { biuda::run_report(config->value); });
}

biuda_status biuda_run_repro(const biuda_config* config) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { biuda::run_repro(config->value); });
}

biuda_status biuda_dataset_load(const char* root, biuda_dataset** out) {
  if (root == nullptr) return null_arg("root");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    auto ds = std::make_unique<biuda_dataset>();
    ds->bundle = biuda::load_dataset(root);
    for (int d = 0; d < 2; ++d) ds->domains[d] = ds->bundle.domain_samples(biuda::DomainId(d));
    *out = ds.release();
  });
}

void biuda_dataset_free(biuda_dataset* dataset) { delete dataset; }

biuda_status biuda_dataset_count(const biuda_dataset* dataset, int domain, size_t* count) {
  if (dataset == nullptr) return null_arg("dataset");
  if (count == nullptr) return null_arg("count");
  if (auto s = domain_arg(domain); s != BIUDA_OK) return s;
  *count = dataset->domains[domain].size();
  return BIUDA_OK;
}

biuda_status biuda_dataset_image_size(const biuda_dataset* dataset, int* size) {
  if (dataset == nullptr) return null_arg("dataset");
  if (size == nullptr) return null_arg("size");
  *size = dataset->bundle.manifest.image_size;
  return BIUDA_OK;
}

biuda_status biuda_dataset_num_classes(const biuda_dataset* dataset, int* num_classes) {
  if (dataset == nullptr) return null_arg("dataset");
  if (num_classes == nullptr) return null_arg("num_classes");
  *num_classes = dataset->bundle.manifest.num_classes();
  return BIUDA_OK;
}

biuda_status biuda_dataset_sample(const biuda_dataset* dataset, int domain, size_t index, float* image,
                                  uint8_t* mask, int* case_id, int* slice_id) {
  if (dataset == nullptr) return null_arg("dataset");
  if (auto s = domain_arg(domain); s != BIUDA_OK) return s;
  const auto& samples = dataset->domains[domain];
  if (index >= samples.size()) return fail(BIUDA_ERR_ARGUMENT, "sample index out of range");
  const auto& s = samples[index];
  if (image != nullptr) std::copy(s.image.data.begin(), s.image.data.end(), image);
  if (mask != nullptr) {
    if (!s.mask) return fail(BIUDA_ERR_CONFIG, "sample has no mask");
    std::copy(s.mask->data.begin(), s.mask->data.end(), mask);
  }
  if (case_id != nullptr) *case_id = s.case_id;
  if (slice_id != nullptr) *slice_id = s.slice_id;
  return BIUDA_OK;
}

biuda_status biuda_model_load(const char* checkpoint, biuda_model** out) {
  if (checkpoint == nullptr) return null_arg("checkpoint");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    auto model = std::make_unique<biuda_model>();
    model->params = biuda::load_inference_params(checkpoint);
    *out = model.release();
  });
}

void biuda_model_free(biuda_model* model) { delete model; }

biuda_status biuda_model_info(const biuda_model* model, int* image_size, int* num_classes) {
  if (model == nullptr) return null_arg("model");
  if (image_size != nullptr) *image_size = model->params->config().image_size;
  if (num_classes != nullptr) *num_classes = model->params->config().num_classes;
  return BIUDA_OK;
}

biuda_status biuda_model_infer(biuda_model* model, const float* image, int height, int width, uint8_t* labels) {
  if (model == nullptr) return null_arg("model");
  if (image == nullptr) return null_arg("image");
  if (labels == nullptr) return null_arg("labels");
  if (height <= 0 || width <= 0) return fail(BIUDA_ERR_ARGUMENT, "image dimensions must be positive");
  return guarded([&] {
    biuda::Image img(height, width);
    std::copy(image, image + static_cast<std::size_t>(height) * width, img.data.begin());
    const auto mask = biuda::infer(model->params, img);
    std::copy(mask.data.begin(), mask.data.end(), labels);
  });
}

}  // extern "C"
