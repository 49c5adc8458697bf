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

#include <span>
#include <utility>

#include "pianogm/grid.hpp"

namespace pianogm {

/// Frame index containing time `seconds` (floor, tolerant of 1e-9 round-off).
int time_to_frame(double seconds, const FrameGrid& grid);

/// Half-open frame span [first, last) a note occupies on a roll of `frames`
/// rows. Always at least one frame long unless clipped by the roll end.
std::pair<int, int> note_frame_span(const NoteEvent& note, const FrameGrid& grid, int frames);

struct PianoRolls {
  OnsetRoll onset;
  FrameRoll frame;
};

/// Rasterizes notes onto T = ceil(duration_s * fps) frames. Throws
/// std::invalid_argument listing every note outside [21, 108] or starting at
/// or after duration_s.
PianoRolls rasterize(std::span<const NoteEvent> events, const FrameGrid& grid,
                     double duration_s);

/// c_art[t] = 1 iff any note sounds in frame t.
LabelSequence label_articulation(const FrameRoll& frame_roll);

/// c_dyn[t] = 1 iff at least one note is active at t and the mean velocity of
/// the active notes is strictly greater than 70.
LabelSequence label_dynamics(std::span<const NoteEvent> events, const FrameGrid& grid, int frames);

inline constexpr double kLoudVelocityThreshold = 70.0;

/// All frame-aligned tensors of one piece.
struct PieceTensors {
  MelSpectrogram mel;
  OnsetRoll onset;
  FrameRoll frame;
  ConditionSequence conditions;

  int frames() const { return onset.frames(); }
  /// Throws if the five tensors disagree on T.
  void check_aligned() const;
};

/// Number of frames in a window of window_s seconds: round(window_s * fps).
int window_frames(double window_s, const FrameGrid& grid);

/// Slices [start_frame, start_frame + window_frames) from every tensor.
PieceTensors crop_pair(const PieceTensors& piece, int start_frame, double window_s,
                       const FrameGrid& grid);
PieceTensors crop_frames(const PieceTensors& piece, int start_frame, int length);

}  // namespace pianogm
