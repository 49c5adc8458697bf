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

#include <filesystem>
#include <span>

#include "pianogm/grid.hpp"
#include "pianogm/roll.hpp"

namespace pianogm {

/// Rolls, labels and log-Mel of one performance on T = ceil(duration_s * fps)
/// frames; the spectrogram is trimmed or floor-padded to T.
PieceTensors featurize_performance(std::span<const NoteEvent> events, std::span<const float> audio,
                                   int sample_rate, double duration_s, const FrameGrid& grid);

/// Writes `mel` (T x 80 float32), `onset`/`frame` (T x 88 uint8) and
/// `c_art`/`c_dyn` (T uint8) to an .npz archive, plus a `<stem>.grid.json`
/// sidecar describing the frame grid.
void save_piece(const std::filesystem::path& path, const PieceTensors& piece,
                const FrameGrid& grid);

struct LoadedPiece {
  PieceTensors tensors;
  FrameGrid grid;
};

/// Loads and validates a piece archive; the sidecar is optional (default grid
/// when absent).
LoadedPiece load_piece(const std::filesystem::path& path);

std::filesystem::path grid_sidecar_path(const std::filesystem::path& archive);

}  // namespace pianogm
