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

#include "pianogm/piece_archive.hpp"

#include <stdexcept>

#include "pianogm/npz.hpp"
#include "pianogm/spectrogram.hpp"

namespace pianogm {

PieceTensors featurize_performance(std::span<const NoteEvent> events, std::span<const float> audio,
                                   int sample_rate, double duration_s, const FrameGrid& grid) {
  PieceTensors out;
  auto rolls = rasterize(events, grid, duration_s);
  out.onset = std::move(rolls.onset);
  out.frame = std::move(rolls.frame);
  const int frames = out.onset.frames();
  out.conditions.c_art = label_articulation(out.frame);
  out.conditions.c_dyn = label_dynamics(events, grid, frames);
  out.mel = fit_frames(mel_spectrogram(audio, sample_rate, grid), frames);
  return out;
}

namespace {

ByteMatrix byte_matrix(const NpyArray& a, const std::string& name, std::size_t cols) {
  if (a.shape.size() != 2 || a.shape[1] != cols) {
    throw std::runtime_error("piece archive: '" + name + "' must be T x " + std::to_string(cols));
  }
  const auto v = a.values<std::uint8_t>();
  ByteMatrix m = Eigen::Map<const ByteMatrix>(v.data(), static_cast<long>(a.shape[0]),
                                              static_cast<long>(cols));
  if (m.size() > 0 && m.maxCoeff() > 1) throw std::runtime_error("piece archive: '" + name + "' is not binary");
  return m;
}

LabelSequence labels(const NpyArray& a, const std::string& name) {
  if (a.shape.size() != 1) throw std::runtime_error("piece archive: '" + name + "' must be 1-D");
  auto v = a.values<std::uint8_t>();
  for (auto x : v) {
    if (x > 1) throw std::runtime_error("piece archive: '" + name + "' is not binary");
  }
  return v;
}

}  // namespace

std::filesystem::path grid_sidecar_path(const std::filesystem::path& archive) {
  auto p = archive;
  p.replace_extension(".grid.json");
  return p;
}

void save_piece(const std::filesystem::path& path, const PieceTensors& piece,
                const FrameGrid& grid) {
  piece.check_aligned();
  const auto t = static_cast<std::size_t>(piece.frames());
  NpzArchive archive;
  archive.put("mel", NpyArray::from<float>(
                         std::span(piece.mel.data.data(), piece.mel.data.size()),
                         {t, static_cast<std::size_t>(piece.mel.bins())}));
  archive.put("onset", NpyArray::from<std::uint8_t>(
                           std::span(piece.onset.data.data(), piece.onset.data.size()),
                           {t, static_cast<std::size_t>(kNumPitches)}));
  archive.put("frame", NpyArray::from<std::uint8_t>(
                           std::span(piece.frame.data.data(), piece.frame.data.size()),
                           {t, static_cast<std::size_t>(kNumPitches)}));
  archive.put("c_art", NpyArray::from<std::uint8_t>(piece.conditions.c_art, {t}));
  archive.put("c_dyn", NpyArray::from<std::uint8_t>(piece.conditions.c_dyn, {t}));
  archive.save(path);
  write_text_atomically(grid_sidecar_path(path), grid.to_json() + "\n");
}

LoadedPiece load_piece(const std::filesystem::path& path) {
  const auto archive = NpzArchive::load(path);
  LoadedPiece out;
  const auto& mel = archive.at("mel");
  if (mel.shape.size() != 2 || mel.shape[1] != static_cast<std::size_t>(kNumMels)) {
    throw std::runtime_error(path.string() + ": 'mel' must be T x 80");
  }
  const auto mel_values = mel.values<float>();
  out.tensors.mel.data = Eigen::Map<const FloatMatrix>(
      mel_values.data(), static_cast<long>(mel.shape[0]), kNumMels);
  if (!out.tensors.mel.data.allFinite()) throw std::runtime_error(path.string() + ": non-finite Mel values");
  out.tensors.onset.data = byte_matrix(archive.at("onset"), "onset", kNumPitches);
  out.tensors.frame.data = byte_matrix(archive.at("frame"), "frame", kNumPitches);
  out.tensors.conditions.c_art = labels(archive.at("c_art"), "c_art");
  out.tensors.conditions.c_dyn = labels(archive.at("c_dyn"), "c_dyn");
  out.tensors.check_aligned();
  const auto sidecar = grid_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) out.grid = FrameGrid::from_json(read_text_file(sidecar));
  return out;
}

}  // namespace pianogm
