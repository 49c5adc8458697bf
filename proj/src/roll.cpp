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

#include "pianogm/roll.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pianogm {

int time_to_frame(double seconds, const FrameGrid& grid) {
  return static_cast<int>(std::floor(seconds * grid.frames_per_second() + 1e-9));
}

std::pair<int, int> note_frame_span(const NoteEvent& note, const FrameGrid& grid, int frames) {
  const int first = time_to_frame(note.onset, grid);
  const int last = std::max(first + 1, time_to_frame(note.offset, grid));
  return {std::clamp(first, 0, frames), std::clamp(last, 0, frames)};
}

PianoRolls rasterize(std::span<const NoteEvent> events, const FrameGrid& grid,
                     double duration_s) {
  std::string rejected;
  for (const auto& note : events) {
    if (note.pitch < kLowestPitch || note.pitch > kHighestPitch) {
      rejected += "\n  pitch outside [21, 108]: " + describe(note);
    } else if (!(note.onset >= 0.0 && note.onset < duration_s)) {
      rejected += "\n  onset outside [0, duration): " + describe(note);
    }
  }
  if (!rejected.empty()) throw std::invalid_argument("cannot rasterize events:" + rejected);

  const int frames = grid.frames_for_duration(duration_s);
  PianoRolls rolls;
  rolls.onset.data = ByteMatrix::Zero(frames, kNumPitches);
  rolls.frame.data = ByteMatrix::Zero(frames, kNumPitches);
  for (const auto& note : events) {
    const int column = note.pitch - kLowestPitch;
    const auto [first, last] = note_frame_span(note, grid, frames);
    if (first >= frames) continue;
    rolls.onset.data(first, column) = 1;
    for (int t = first; t < last; ++t) rolls.frame.data(t, column) = 1;
  }
  return rolls;
}

LabelSequence label_articulation(const FrameRoll& frame_roll) {
  LabelSequence labels(frame_roll.frames(), 0);
  for (int t = 0; t < frame_roll.frames(); ++t) {
    labels[t] = frame_roll.data.row(t).maxCoeff() > 0 ? 1 : 0;
  }
  return labels;
}

LabelSequence label_dynamics(std::span<const NoteEvent> events, const FrameGrid& grid,
                             int frames) {
  std::vector<long> velocity_sum(frames, 0);
  std::vector<int> active(frames, 0);
  for (const auto& note : events) {
    const auto [first, last] = note_frame_span(note, grid, frames);
    for (int t = first; t < last; ++t) {
      velocity_sum[t] += note.velocity;
      ++active[t];
    }
  }
  LabelSequence labels(frames, 0);
  for (int t = 0; t < frames; ++t) {
    // Integer form of sum / count > 70.
    labels[t] = active[t] > 0 &&
                        velocity_sum[t] > static_cast<long>(kLoudVelocityThreshold) * active[t]
                    ? 1
                    : 0;
  }
  return labels;
}

void PieceTensors::check_aligned() const {
  const long t = onset.data.rows();
  if (mel.data.rows() != t || frame.data.rows() != t ||
      static_cast<long>(conditions.c_art.size()) != t ||
      static_cast<long>(conditions.c_dyn.size()) != t) {
    throw std::invalid_argument(
        "piece tensors disagree on frame count: mel=" + std::to_string(mel.data.rows()) +
        " onset=" + std::to_string(t) + " frame=" + std::to_string(frame.data.rows()) +
        " c_art=" + std::to_string(conditions.c_art.size()) +
        " c_dyn=" + std::to_string(conditions.c_dyn.size()));
  }
}

int window_frames(double window_s, const FrameGrid& grid) {
  return static_cast<int>(std::lround(window_s * grid.frames_per_second()));
}

PieceTensors crop_frames(const PieceTensors& piece, int start_frame, int length) {
  piece.check_aligned();
  if (length > piece.frames()) {
    throw std::invalid_argument("piece has " + std::to_string(piece.frames()) +
                                " frames, shorter than the " + std::to_string(length) +
                                "-frame window; pad the piece or skip it");
  }
  if (start_frame < 0 || start_frame + length > piece.frames()) {
    throw std::out_of_range("crop [" + std::to_string(start_frame) + ", " +
                            std::to_string(start_frame + length) + ") exceeds " +
                            std::to_string(piece.frames()) + " frames");
  }
  PieceTensors crop;
  crop.mel.data = piece.mel.data.middleRows(start_frame, length);
  crop.onset.data = piece.onset.data.middleRows(start_frame, length);
  crop.frame.data = piece.frame.data.middleRows(start_frame, length);
  auto slice = [&](const LabelSequence& s) {
    return LabelSequence(s.begin() + start_frame, s.begin() + start_frame + length);
  };
  crop.conditions.c_art = slice(piece.conditions.c_art);
  crop.conditions.c_dyn = slice(piece.conditions.c_dyn);
  return crop;
}

PieceTensors crop_pair(const PieceTensors& piece, int start_frame, double window_s,
                       const FrameGrid& grid) {
  return crop_frames(piece, start_frame, window_frames(window_s, grid));
}

}  // namespace pianogm
