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
#include <functional>
#include <string>
#include <vector>

#include "pianogm/grid.hpp"
#include "pianogm/manifest.hpp"
#include "pianogm/roll.hpp"

namespace pianogm {

/// Called once per prepared piece (or once per skipped source with an empty
/// archive and the reason in `message`).
using PrepareLog = std::function<void(const DatasetEntry& entry, const std::string& message)>;

/// One-line summary: name, T, note count, % of frames with c_art = 1 and
/// c_dyn = 1.
std::string summarize(const DatasetEntry& entry);

DatasetEntry describe_piece(const std::string& name, const std::string& archive, const std::string& split,
                            const PieceTensors& piece, int notes, const std::string& style);

struct SyntheticOptions {
  int train_pieces = 16;
  int eval_pieces = 0;
  double piece_seconds = 30.0;
  std::uint64_t seed = 0;
};

/// Renders toy pieces into `out_dir` (archives + manifest.csv). Training
/// pieces cycle through the four style cells, as do the held-out pieces
/// (split "test"), whose seeds never coincide with training seeds.
std::vector<DatasetEntry> prepare_synthetic(const std::filesystem::path& out_dir, const SyntheticOptions& options,
                                            const FrameGrid& grid, const PrepareLog& log = {});

/// Featurizes MIDI/audio pairs. Unreadable or inconsistent pairs are skipped
/// and reported through `log`; throws std::runtime_error when the manifest is
/// empty or every pair fails.
std::vector<DatasetEntry> prepare_sources(const std::vector<SourcePair>& sources,
                                          const std::filesystem::path& out_dir, const FrameGrid& grid,
                                          const PrepareLog& log = {});

struct Dataset {
  FrameGrid grid;
  std::vector<DatasetEntry> entries;
  std::vector<PieceTensors> pieces;
};

/// Loads every piece of `split` listed in `<dir>/manifest.csv`. Throws when
/// the directory has no manifest, the split is empty or the pieces disagree
/// on their frame grid.
Dataset load_dataset(const std::filesystem::path& dir, const std::string& split);

}  // namespace pianogm
