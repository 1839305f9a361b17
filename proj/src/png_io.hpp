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

#include "dataset.hpp"

namespace biuda {

/// 8-bit grayscale PNG I/O. Errors are reported as IoError naming the file.
void write_png_gray8(const std::filesystem::path& path, const Raster<std::uint8_t>& raster);
Raster<std::uint8_t> read_png_gray8(const std::filesystem::path& path);

}  // namespace biuda
