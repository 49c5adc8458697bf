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
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pianogm {

inline constexpr int kNumPitches = 88;
inline constexpr int kLowestPitch = 21;
inline constexpr int kHighestPitch = 108;
inline constexpr int kNumMels = 80;

/// Floor applied to Mel power before the logarithm.
inline constexpr double kMelPowerFloor = 1e-5;
/// log(kMelPowerFloor); the value every silent Mel cell takes.
double log_floor();

/// Time/frequency analysis grid shared by every tensor of a piece.
struct FrameGrid {
  int sample_rate = 16000;
  int hop_length = 256;
  int window_length = 1024;
  int n_mels = kNumMels;
  double mel_fmin = 30.0;
  double mel_fmax = 8000.0;

  double frames_per_second() const {
    return static_cast<double>(sample_rate) / hop_length;
  }

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  /// Number of roll frames covering duration_s: ceil(duration_s * fps).
  int frames_for_duration(double duration_s) const;

  std::string to_json() const;
  static FrameGrid from_json(const std::string& text);

  bool operator==(const FrameGrid&) const = default;
};

struct NoteEvent {
  int pitch = 60;
  double onset = 0.0;
  double offset = 0.0;
  int velocity = 64;

  bool operator==(const NoteEvent&) const = default;
};

std::string describe(const NoteEvent& note);

using ByteMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FloatMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// T x 88 binary matrix with a single 1 at each note's onset frame.
struct OnsetRoll {
  ByteMatrix data;
  int frames() const { return static_cast<int>(data.rows()); }
};

/// T x 88 binary matrix marking every frame a note sounds.
struct FrameRoll {
  ByteMatrix data;
  int frames() const { return static_cast<int>(data.rows()); }
};

using LabelSequence = std::vector<std::uint8_t>;

struct ConditionSequence {
  LabelSequence c_art;
  LabelSequence c_dyn;
};

/// T x n_mels log-Mel power.
struct MelSpectrogram {
  FloatMatrix data;
  int frames() const { return static_cast<int>(data.rows()); }
  int bins() const { return static_cast<int>(data.cols()); }
};

}  // namespace pianogm
