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
#include <optional>

#include "pianogm/grid.hpp"
#include "pianogm/trainer.hpp"

namespace pianogm {

inline constexpr const char* kCheckpointFormat = "pianogm-checkpoint";
inline constexpr std::int64_t kCheckpointVersion = 1;

/// Model weights, Adam moments, step counter, noise RNG and config in one
/// .npz file, plus a `<stem>.config.json` sidecar. Writes are atomic.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path,
                     const std::optional<FrameGrid>& grid = std::nullopt);

struct LoadedCheckpoint {
  TrainState state;
  std::optional<FrameGrid> grid;
};

/// Fully validates the archive before returning. Throws std::runtime_error
/// on a missing/foreign/corrupt file or a version mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path checkpoint_sidecar_path(const std::filesystem::path& path);

}  // namespace pianogm
