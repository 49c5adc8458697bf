// Copyright 2026 The pianogm Authors.
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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pianogm/grid.hpp"

namespace pianogm {

/// 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 255) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Grid of spectrogram heatmaps (time on x, Mel bin upwards on y), each with
/// its label drawn above it. Two columns for four panels, otherwise one row.
/// All panels share one colour scale.
Image render_figure(const std::vector<MelSpectrogram>& panels, const std::vector<std::string>& labels);

/// Renders and writes a PNG. Throws std::runtime_error on I/O failure and
/// std::invalid_argument without panels or with a label count mismatch.
void emit_figure(const std::vector<MelSpectrogram>& panels, const std::vector<std::string>& labels,
                 const std::filesystem::path& path);

void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace pianogm
