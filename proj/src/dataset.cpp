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

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "png_io.hpp"

namespace biuda {
namespace fs = std::filesystem;

DomainId::DomainId(int value) : value_(value) {
  if (value != 0 && value != 1) throw DomainError("domain id must be 0 or 1, got " + std::to_string(value));
}

void SynthConfig::validate() const {
  if (image_size < 16) throw ConfigError("image_size must be >= 16, got " + std::to_string(image_size));
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2, got " + std::to_string(num_classes));
  if (num_classes > 255) throw ConfigError("num_classes must fit an 8-bit mask");
  if (num_cases < 1) throw ConfigError("num_cases must be positive");
  if (slices_per_case < 1) throw ConfigError("slices_per_case must be positive");
  if (folds < 2 || folds > num_cases) {
    throw ConfigError("folds must lie in [2, num_cases], got " + std::to_string(folds));
  }
  for (const auto& a : appearance) {
    if (a.blur_sigma < 0 || a.noise_std < 0 || a.texture_amplitude < 0 || a.texture_frequency < 0) {
      throw ConfigError("appearance parameters must be non-negative");
    }
  }
}

std::vector<ImageSample> DatasetBundle::domain_samples(DomainId d) const {
  std::vector<ImageSample> out;
  for (const auto& s : samples) {
    if (s.domain == d) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const ImageSample& a, const ImageSample& b) {
    return std::tie(a.case_id, a.slice_id) < std::tie(b.case_id, b.slice_id);
  });
  return out;
}

int DatasetBundle::num_cases() const {
  std::set<int> ids;
  for (const auto& s : samples) ids.insert(s.case_id);
  return static_cast<int>(ids.size());
}

int DatasetBundle::fold_of(int case_id) const {
  auto it = manifest.folds.find(case_id);
  if (it == manifest.folds.end()) throw ConfigError("case " + std::to_string(case_id) + " has no fold assignment");
  return it->second;
}

std::vector<std::string> default_class_names(int num_classes) {
  std::vector<std::string> names{"background"};
  for (int k = 1; k < num_classes; ++k) names.push_back("structure_" + std::to_string(k));
  return names;
}

// ---------------------------------------------------------------------------
// Synthetic geometry
// ---------------------------------------------------------------------------
namespace {

// A star-shaped blob: radius modulated by two low-order harmonics.
struct Blob {
  double cy, cx, radius;
  double a1, a2, phase1, phase2;

  bool contains(double y, double x) const {
    const double dy = y - cy;
    const double dx = x - cx;
    const double theta = std::atan2(dy, dx);
    const double r = radius * (1.0 + a1 * std::cos(theta + phase1) + a2 * std::cos(2.0 * theta + phase2));
    return std::hypot(dy, dx) < r;
  }
};

Blob make_blob(double cy, double cx, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Blob b{cy, cx, radius, 0, 0, 0, 0};
  b.a1 = 0.15 * u(rng);
  b.a2 = 0.10 * u(rng);
  b.phase1 = 2.0 * std::numbers::pi * u(rng);
  b.phase2 = 2.0 * std::numbers::pi * u(rng);
  return b;
}

void paint(Mask& m, const Blob& b, std::uint8_t label) {
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (b.contains(y + 0.5, x + 0.5)) m.at(y, x) = label;
    }
  }
}

// Nested chain of structures inside one outer blob plus (for K >= 3) one
// satellite structure next to it. Every slice of a case shares the case-level
// layout; radii and positions drift smoothly with the slice index.
struct SliceGeometry {
  Mask mask;
  double texture_phase_x;
  double texture_phase_y;
};

std::vector<SliceGeometry> case_geometry(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double size = cfg.image_size;
  const int foreground = cfg.num_classes - 1;
  const bool satellite = cfg.num_classes >= 3;
  const int chain = foreground - (satellite ? 1 : 0);

  const double cy = size / 2 + size * (0.16 * u(rng) - 0.08);
  const double cx = size / 2 + size * (0.16 * u(rng) - 0.08);
  const double outer = size * (0.26 + 0.06 * u(rng));
  const double inner_angle = 2.0 * std::numbers::pi * u(rng);
  const double satellite_angle = 2.0 * std::numbers::pi * u(rng);

  std::vector<SliceGeometry> slices;
  for (int s = 0; s < cfg.slices_per_case; ++s) {
    const double t = cfg.slices_per_case > 1 ? static_cast<double>(s) / (cfg.slices_per_case - 1) - 0.5 : 0.0;
    std::mt19937_64 sub(rng());
    SliceGeometry g{Mask(cfg.image_size, cfg.image_size, 0), 0, 0};

    double by = cy, bx = cx, r = outer * (1.0 - 0.3 * t * t);
    const double outer_r = r;
    for (int level = 0; level < chain; ++level) {
      if (level > 0) {
        const double angle = inner_angle + (level == 1 ? t : 2.0 * level);
        const double step = 0.3 * r;
        by += step * std::sin(angle);
        bx += step * std::cos(angle);
        r *= 0.55;
      }
      paint(g.mask, make_blob(by, bx, r, sub), static_cast<std::uint8_t>(level + 1));
    }
    if (satellite) {
      const double dist = outer_r + 0.14 * size;
      const double angle = satellite_angle + 0.5 * t;
      paint(g.mask, make_blob(cy + dist * std::sin(angle), cx + dist * std::cos(angle), 0.1 * size, sub),
            static_cast<std::uint8_t>(foreground));
    }
    g.texture_phase_x = 2.0 * std::numbers::pi * u(rng);
    g.texture_phase_y = 2.0 * std::numbers::pi * u(rng);
    slices.push_back(std::move(g));
  }
  return slices;
}

// Class intensity levels shared by both domains before the appearance
// transform: dark background, a brightening nested chain, mid-grey satellite.
std::vector<double> class_levels(int num_classes) {
  const bool satellite = num_classes >= 3;
  const int chain = num_classes - 1 - (satellite ? 1 : 0);
  std::vector<double> levels{0.1};
  for (int i = 0; i < chain; ++i) levels.push_back(chain > 1 ? 0.45 + 0.5 * i / (chain - 1) : 0.45);
  if (satellite) levels.push_back(0.6);
  return levels;
}

Image render(const SliceGeometry& g, const std::vector<double>& levels, const Appearance& ap,
             std::mt19937_64& noise_rng) {
  const int n = g.mask.height;
  Image img(n, g.mask.width);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double fy = static_cast<double>(y) / n;
      const double fx = static_cast<double>(x) / n;
      double v = levels[g.mask.at(y, x)];
      v += ap.texture_amplitude * std::sin(2.0 * std::numbers::pi * ap.texture_frequency * fx + g.texture_phase_x) *
           std::sin(2.0 * std::numbers::pi * ap.texture_frequency * fy + g.texture_phase_y);
      if (ap.invert) v = 1.0 - v;
      img.at(y, x) = static_cast<float>(v);
    }
  }
  img = gaussian_blur(img, ap.blur_sigma);
  if (ap.noise_std > 0) {
    std::normal_distribution<double> noise(0.0, ap.noise_std);
    for (auto& v : img.data) v = static_cast<float>(v + noise(noise_rng));
  }
  for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

}  // namespace

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& k : kernel) k /= total;

  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  Image tmp(image.height, image.width);
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * image.at(y, reflect(x + i, image.width));
      tmp.at(y, x) = static_cast<float>(acc);
    }
  }
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(reflect(y + i, image.height), x);
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

DatasetBundle synth_dataset(const SynthConfig& config) {
  config.validate();
  DatasetBundle bundle;
  bundle.manifest.classes = default_class_names(config.num_classes);
  bundle.manifest.domains = {"domain0", "domain1"};
  bundle.manifest.image_size = config.image_size;
  bundle.manifest.seed = config.seed;

  std::mt19937_64 geometry_rng(config.seed);
  std::array<std::mt19937_64, 2> noise_rng{std::mt19937_64(config.seed ^ 0x9e3779b97f4a7c15ULL),
                                           std::mt19937_64(config.seed ^ 0xc2b2ae3d27d4eb4fULL)};
  const auto levels = class_levels(config.num_classes);

  std::array<std::vector<ImageSample>, 2> per_domain;
  for (int c = 0; c < config.num_cases; ++c) {
    const auto slices = case_geometry(config, geometry_rng);
    for (int s = 0; s < static_cast<int>(slices.size()); ++s) {
      for (int d = 0; d < 2; ++d) {
        per_domain[d].push_back(ImageSample{render(slices[s], levels, config.appearance[d], noise_rng[d]),
                                            slices[s].mask, DomainId(d), c, s});
      }
    }
  }
  for (auto& v : per_domain) std::move(v.begin(), v.end(), std::back_inserter(bundle.samples));
  split_folds(bundle, config.folds, config.seed);
  return bundle;
}

std::map<int, int> split_folds(DatasetBundle& bundle, int k, std::uint64_t seed) {
  std::set<int> ids;
  for (const auto& s : bundle.samples) ids.insert(s.case_id);
  if (k < 2 || k > static_cast<int>(ids.size())) {
    throw ConfigError("fold count must lie in [2, " + std::to_string(ids.size()) + "], got " + std::to_string(k));
  }
  std::vector<int> cases(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(cases.begin(), cases.end(), rng);
  std::map<int, int> folds;
  for (std::size_t i = 0; i < cases.size(); ++i) folds[cases[i]] = static_cast<int>(i % k);
  bundle.manifest.folds = folds;
  return folds;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------
namespace {

std::string sample_name(int case_id, int slice_id) {
  return "case" + std::to_string(case_id) + "_slice" + std::to_string(slice_id) + ".png";
}

fs::path domain_dir(const fs::path& root, DomainId d) { return root / ("domain" + std::to_string(d.value())); }

}  // namespace

void save_dataset(const DatasetBundle& bundle, const fs::path& root) {
  const auto& m = bundle.manifest;
  std::error_code ec;
  for (int d = 0; d < 2; ++d) {
    fs::create_directories(domain_dir(root, DomainId(d)) / "images", ec);
    fs::create_directories(domain_dir(root, DomainId(d)) / "masks", ec);
    if (ec) throw IoError("cannot create '" + domain_dir(root, DomainId(d)).string() + "': " + ec.message());
  }
  nlohmann::json folds = nlohmann::json::object();
  for (const auto& [case_id, fold] : m.folds) folds[std::to_string(case_id)] = fold;
  nlohmann::json manifest{{"classes", m.classes},
                          {"domains", m.domains},
                          {"image_size", m.image_size},
                          {"folds", folds},
                          {"seed", m.seed}};
  {
    std::ofstream out(root / "manifest.json");
    if (!out) throw IoError("cannot write '" + (root / "manifest.json").string() + "'");
    out << manifest.dump(2) << '\n';
  }
  for (const auto& s : bundle.samples) {
    Raster<std::uint8_t> pixels(s.image.height, s.image.width);
    for (std::size_t i = 0; i < s.image.size(); ++i) {
      pixels.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(s.image.data[i], 0.0f, 1.0f) * 255.0f));
    }
    const auto dir = domain_dir(root, s.domain);
    write_png_gray8(dir / "images" / sample_name(s.case_id, s.slice_id), pixels);
    if (s.mask) write_png_gray8(dir / "masks" / sample_name(s.case_id, s.slice_id), *s.mask);
  }
}

DatasetBundle load_dataset(const fs::path& root) {
  const auto manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("missing manifest '" + manifest_path.string() + "'");
  DatasetBundle bundle;
  try {
    const auto j = nlohmann::json::parse(in);
    auto& m = bundle.manifest;
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.domains = j.at("domains").get<std::vector<std::string>>();
    m.image_size = j.at("image_size").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key, value] : j.at("folds").items()) m.folds[std::stoi(key)] = value.get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  } catch (const std::invalid_argument&) {
    throw IoError("malformed fold key in '" + manifest_path.string() + "'");
  }
  const int size = bundle.manifest.image_size;
  const int k = bundle.manifest.num_classes();
  if (bundle.manifest.domains.size() != 2) throw IoError("manifest '" + manifest_path.string() + "' must list 2 domains");

  static const std::regex name_re(R"(case(\d+)_slice(\d+)\.png)");
  for (int d = 0; d < 2; ++d) {
    const auto images_dir = domain_dir(root, DomainId(d)) / "images";
    if (!fs::is_directory(images_dir)) throw IoError("missing directory '" + images_dir.string() + "'");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(images_dir)) files.push_back(entry.path());
    std::vector<ImageSample> samples;
    for (const auto& file : files) {
      std::smatch match;
      const auto name = file.filename().string();
      if (!std::regex_match(name, match, name_re)) continue;
      ImageSample s;
      s.domain = DomainId(d);
      s.case_id = std::stoi(match[1]);
      s.slice_id = std::stoi(match[2]);
      const auto pixels = read_png_gray8(file);
      if (pixels.height != size || pixels.width != size) {
        throw IoError("'" + file.string() + "' is " + std::to_string(pixels.height) + "x" +
                      std::to_string(pixels.width) + ", manifest says " + std::to_string(size));
      }
      s.image = Image(size, size);
      for (std::size_t i = 0; i < pixels.size(); ++i) s.image.data[i] = pixels.data[i] / 255.0f;
      const auto mask_file = domain_dir(root, DomainId(d)) / "masks" / name;
      if (fs::exists(mask_file)) {
        auto mask = read_png_gray8(mask_file);
        if (!mask.same_shape(pixels)) throw IoError("'" + mask_file.string() + "' does not match its image size");
        for (auto v : mask.data) {
          if (v >= k) {
            throw IoError("'" + mask_file.string() + "' contains label " + std::to_string(v) + " but only " +
                          std::to_string(k) + " classes exist");
          }
        }
        s.mask = std::move(mask);
      }
      if (!bundle.manifest.folds.contains(s.case_id)) {
        throw IoError("'" + file.string() + "' belongs to case " + std::to_string(s.case_id) +
                      " which has no fold in the manifest");
      }
      samples.push_back(std::move(s));
    }
    std::sort(samples.begin(), samples.end(), [](const ImageSample& a, const ImageSample& b) {
      return std::tie(a.case_id, a.slice_id) < std::tie(b.case_id, b.slice_id);
    });
    std::move(samples.begin(), samples.end(), std::back_inserter(bundle.samples));
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

AugmentParams draw_augment(std::mt19937_64& rng, int image_size) {
  AugmentParams p;
  p.pad = static_cast<int>(std::lround(kCropMargin * image_size));
  std::uniform_int_distribution<int> offset(0, 2 * p.pad);
  p.offset_y = offset(rng);
  p.offset_x = offset(rng);
  p.flip = std::bernoulli_distribution(0.5)(rng);
  p.angle_deg = std::uniform_real_distribution<double>(-kMaxRotationDeg, kMaxRotationDeg)(rng);
  return p;
}

namespace {

float border_mean(const Image& img) {
  double acc = 0;
  int n = 0;
  for (int x = 0; x < img.width; ++x) {
    acc += img.at(0, x) + img.at(img.height - 1, x);
    n += 2;
  }
  for (int y = 1; y + 1 < img.height; ++y) {
    acc += img.at(y, 0) + img.at(y, img.width - 1);
    n += 2;
  }
  return n > 0 ? static_cast<float>(acc / n) : 0.0f;
}

template <typename T>
Raster<T> pad_crop_flip(const Raster<T>& in, const AugmentParams& p, T fill) {
  const int oy = std::clamp(p.offset_y, 0, 2 * p.pad);
  const int ox = std::clamp(p.offset_x, 0, 2 * p.pad);
  Raster<T> out(in.height, in.width, fill);
  for (int y = 0; y < in.height; ++y) {
    const int sy = y + oy - p.pad;
    if (sy < 0 || sy >= in.height) continue;
    for (int x = 0; x < in.width; ++x) {
      const int sx = x + ox - p.pad;
      if (sx < 0 || sx >= in.width) continue;
      out.at(y, p.flip ? in.width - 1 - x : x) = in.at(sy, sx);
    }
  }
  return out;
}

Image rotate_bilinear(const Image& in, double angle_deg, float fill) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  const double cy = (in.height - 1) / 2.0, cx = (in.width - 1) / 2.0;
  auto pixel = [&](int y, int x) -> float {
    return (y < 0 || y >= in.height || x < 0 || x >= in.width) ? fill : in.at(y, x);
  };
  Image out(in.height, in.width);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const double sy = s * (x - cx) + c * (y - cy) + cy;
      const double sx = c * (x - cx) - s * (y - cy) + cx;
      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const double fy = sy - y0, fx = sx - x0;
      out.at(y, x) = static_cast<float>((1 - fy) * ((1 - fx) * pixel(y0, x0) + fx * pixel(y0, x0 + 1)) +
                                        fy * ((1 - fx) * pixel(y0 + 1, x0) + fx * pixel(y0 + 1, x0 + 1)));
    }
  }
  return out;
}

Mask rotate_nearest(const Mask& in, double angle_deg) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  const double cy = (in.height - 1) / 2.0, cx = (in.width - 1) / 2.0;
  Mask out(in.height, in.width, 0);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const int sy = static_cast<int>(std::lround(s * (x - cx) + c * (y - cy) + cy));
      const int sx = static_cast<int>(std::lround(c * (x - cx) - s * (y - cy) + cx));
      if (sy >= 0 && sy < in.height && sx >= 0 && sx < in.width) out.at(y, x) = in.at(sy, sx);
    }
  }
  return out;
}

}  // namespace

ImageSample augment(const ImageSample& sample, const AugmentParams& params) {
  ImageSample out = sample;
  const float fill = border_mean(sample.image);
  out.image = pad_crop_flip(sample.image, params, fill);
  if (params.angle_deg != 0.0) out.image = rotate_bilinear(out.image, params.angle_deg, fill);
  if (sample.mask) {
    out.mask = pad_crop_flip(*sample.mask, params, std::uint8_t{0});
    if (params.angle_deg != 0.0) out.mask = rotate_nearest(*out.mask, params.angle_deg);
  }
  return out;
}

ImageSample augment(const ImageSample& sample, std::mt19937_64& rng) {
  return augment(sample, draw_augment(rng, sample.image.height));
}

}  // namespace biuda
