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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace biuda {

/// Row-major single-channel raster.
template <typename T>
struct Raster {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  T& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Raster& other) const { return height == other.height && width == other.width; }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using Image = Raster<float>;          // intensities in [0, 1]
using Mask = Raster<std::uint8_t>;    // label indices in {0..K-1}

/// Which of the two domains of an experiment a sample belongs to.
class DomainId {
 public:
  constexpr DomainId() = default;
  explicit DomainId(int value);

  static constexpr DomainId source() { return DomainId(Tag{}, 0); }
  static constexpr DomainId target() { return DomainId(Tag{}, 1); }

  constexpr int value() const { return value_; }
  constexpr DomainId other() const { return DomainId(Tag{}, 1 - value_); }
  friend constexpr bool operator==(DomainId, DomainId) = default;
  friend constexpr auto operator<=>(DomainId, DomainId) = default;

 private:
  struct Tag {};
  constexpr DomainId(Tag, int v) : value_(v) {}
  int value_ = 0;
};

struct ImageSample {
  Image image;
  std::optional<Mask> mask;
  DomainId domain;
  int case_id = 0;
  int slice_id = 0;

  friend bool operator==(const ImageSample&, const ImageSample&) = default;
};

/// Per-domain rendering parameters of the synthetic benchmark.
struct Appearance {
  bool invert = false;              // intensity polarity
  double blur_sigma = 0.7;          // Gaussian blur, pixels
  double noise_std = 0.03;
  double texture_frequency = 2.0;   // cycles per image side
  double texture_amplitude = 0.05;

  friend bool operator==(const Appearance&, const Appearance&) = default;
};

struct SynthConfig {
  int image_size = 64;
  int num_cases = 20;
  int slices_per_case = 8;
  int num_classes = 5;
  std::array<Appearance, 2> appearance{
      Appearance{false, 0.7, 0.03, 2.0, 0.05},
      Appearance{true, 1.0, 0.02, 6.0, 0.03},
  };
  int folds = 5;
  std::uint64_t seed = 7;

  /// Throws ConfigError when a dimension is out of range.
  void validate() const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

struct Manifest {
  std::vector<std::string> classes;
  std::vector<std::string> domains;
  int image_size = 0;
  std::map<int, int> folds;  // case_id -> fold index
  std::uint64_t seed = 0;

  int num_classes() const { return static_cast<int>(classes.size()); }
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct DatasetBundle {
  std::vector<ImageSample> samples;
  Manifest manifest;

  /// Samples of one domain, in (case_id, slice_id) order.
  std::vector<ImageSample> domain_samples(DomainId d) const;
  /// Number of distinct case ids.
  int num_cases() const;
  int fold_of(int case_id) const;
};

/// Default class names for K classes: background followed by structure_1..K-1.
std::vector<std::string> default_class_names(int num_classes);

/// Renders every case twice, once per domain appearance, on a shared geometry.
DatasetBundle synth_dataset(const SynthConfig& config);

/// Writes root/manifest.json and root/domain{0,1}/{images,masks}/case{C}_slice{S}.png.
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& root);

/// Inverse of save_dataset. Images are quantized to 1/255; masks are exact.
/// Throws IoError naming the offending file on any inconsistency.
DatasetBundle load_dataset(const std::filesystem::path& root);

/// Partitions cases into k near-equal folds, deterministically from seed,
/// and records the assignment in the manifest.
std::map<int, int> split_folds(DatasetBundle& bundle, int k, std::uint64_t seed);

/// Geometric augmentation draw. Crop offsets are relative to the padded
/// canvas; pad == offset reproduces the input.
struct AugmentParams {
  int pad = 0;
  int offset_y = 0;
  int offset_x = 0;
  bool flip = false;
  double angle_deg = 0.0;
};

inline constexpr double kMaxRotationDeg = 15.0;
inline constexpr double kCropMargin = 0.10;

AugmentParams draw_augment(std::mt19937_64& rng, int image_size);

/// Pad-then-crop, horizontal flip, rotation about the centre. Images use
/// bilinear interpolation, masks nearest neighbour; uncovered pixels take
/// the mean border intensity (image) and background (mask).
ImageSample augment(const ImageSample& sample, const AugmentParams& params);
ImageSample augment(const ImageSample& sample, std::mt19937_64& rng);

/// Separable Gaussian blur with reflected borders.
Image gaussian_blur(const Image& image, double sigma);

}  // namespace biuda
