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

#include "pianogm/figure.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>

namespace pianogm {
namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kScale = 2;
constexpr int kMargin = 12;
constexpr int kPanelHeight = 2 * kNumMels;
constexpr int kMaxPanelWidth = 640;

using Glyph = std::array<const char*, kGlyphH>;

const std::map<char, Glyph>& font() {
  static const std::map<char, Glyph> glyphs = {
      {' ', {".....", ".....", ".....", ".....", ".....", ".....", "....."}},
      {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
      {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
      {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
      {'3', {"####.", "....#", "....#", ".###.", "....#", "....#", "####."}},
      {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
      {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
      {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
      {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
      {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
      {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
      {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
      {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
      {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
      {'D', {"###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."}},
      {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
      {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
      {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"}},
      {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
      {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
      {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
      {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
      {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
      {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
      {'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
      {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
      {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
      {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
      {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
      {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
      {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
      {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
      {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
      {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
      {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
      {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
      {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
      {'-', {".....", ".....", ".....", "#####", ".....", ".....", "....."}},
      {'_', {".....", ".....", ".....", ".....", ".....", ".....", "#####"}},
      {'.', {".....", ".....", ".....", ".....", ".....", ".##..", ".##.."}},
      {',', {".....", ".....", ".....", ".....", ".##..", "..#..", ".#..."}},
      {':', {".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."}},
      {'/', {".....", "....#", "...#.", "..#..", ".#...", "#....", "....."}},
      {'=', {".....", ".....", "#####", ".....", "#####", ".....", "....."}},
      {'>', {".#...", "..#..", "...#.", "....#", "...#.", "..#..", ".#..."}},
      {'<', {"...#.", "..#..", ".#...", "#....", ".#...", "..#..", "...#."}},
      {'(', {"...#.", "..#..", ".#...", ".#...", ".#...", "..#..", "...#."}},
      {')', {".#...", "..#..", "...#.", "...#.", "...#.", "..#..", ".#..."}},
      {'+', {".....", "..#..", "..#..", "#####", "..#..", "..#..", "....."}},
      {'%', {"##...", "##..#", "...#.", "..#..", ".#...", "#..##", "...##"}},
  };
  return glyphs;
}

int text_width(const std::string& text) { return static_cast<int>(text.size()) * (kGlyphW + 1) * kScale; }

void draw_text(Image& img, int x0, int y0, const std::string& text) {
  const auto& glyphs = font();
  int x = x0;
  for (char ch : text) {
    auto it = glyphs.find(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (it == glyphs.end()) it = glyphs.find(' ');
    for (int r = 0; r < kGlyphH; ++r) {
      for (int c = 0; c < kGlyphW; ++c) {
        if (it->second[r][c] != '#') continue;
        for (int dy = 0; dy < kScale; ++dy) {
          for (int dx = 0; dx < kScale; ++dx) img.set(x + c * kScale + dx, y0 + r * kScale + dy, 0, 0, 0);
        }
      }
    }
    x += (kGlyphW + 1) * kScale;
  }
}

// Dark blue -> purple -> orange -> pale yellow.
std::array<std::uint8_t, 3> colormap(double v) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {0, 0, 4}, {80, 18, 123}, {182, 54, 121}, {251, 136, 97}, {252, 253, 191}}};
  v = std::clamp(v, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(v), stops.size() - 2);
  const double f = v - static_cast<double>(i);
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<std::uint8_t>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  }
  return rgb;
}

}  // namespace

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  auto* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

Image render_figure(const std::vector<MelSpectrogram>& panels, const std::vector<std::string>& labels) {
  if (panels.empty()) throw std::invalid_argument("emit_figure: need at least one panel");
  if (labels.size() != panels.size()) throw std::invalid_argument("emit_figure: one label per panel required");

  int max_frames = 1;
  double lo = log_floor(), hi = log_floor() + 1.0;
  for (const auto& p : panels) {
    if (p.frames() == 0 || p.bins() == 0) throw std::invalid_argument("emit_figure: empty panel");
    max_frames = std::max(max_frames, p.frames());
    hi = std::max(hi, static_cast<double>(p.data.maxCoeff()));
  }
  int panel_w = std::min(max_frames, kMaxPanelWidth);
  for (const auto& l : labels) panel_w = std::max(panel_w, std::min(text_width(l), kMaxPanelWidth));
  const double frames_per_px = static_cast<double>(max_frames) / panel_w;

  const int n = static_cast<int>(panels.size());
  const int cols = n == 4 ? 2 : n;
  const int rows = (n + cols - 1) / cols;
  const int label_h = kGlyphH * kScale + 6;
  const int cell_w = panel_w + kMargin;
  const int cell_h = label_h + kPanelHeight + kMargin;
  Image img(kMargin + cols * cell_w, kMargin + rows * cell_h);

  for (int i = 0; i < n; ++i) {
    const int x0 = kMargin + (i % cols) * cell_w;
    const int y0 = kMargin + (i / cols) * cell_h;
    draw_text(img, x0, y0, labels[i]);
    const auto& mel = panels[i].data;
    const int py = y0 + label_h;
    const int bins = panels[i].bins();
    for (int x = 0; x < panel_w; ++x) {
      const int t = static_cast<int>(x * frames_per_px);
      for (int y = 0; y < kPanelHeight; ++y) {
        const int bin = bins - 1 - y * bins / kPanelHeight;
        if (t >= panels[i].frames()) {
          img.set(x0 + x, py + y, 230, 230, 230);
          continue;
        }
        const auto c = colormap((mel(t, bin) - lo) / (hi - lo));
        img.set(x0 + x, py + y, c[0], c[1], c[2]);
      }
    }
  }
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(tmp.c_str(), "wb"), &std::fclose);
  if (!file) throw std::runtime_error("cannot write figure " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw std::runtime_error("cannot write figure " + path.string());
  file.reset();
  std::filesystem::rename(tmp, path);
}

void emit_figure(const std::vector<MelSpectrogram>& panels, const std::vector<std::string>& labels,
                 const std::filesystem::path& path) {
  write_png(render_figure(panels, labels), path);
}

}  // namespace pianogm
