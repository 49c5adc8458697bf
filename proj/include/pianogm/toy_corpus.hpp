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
#include <span>
#include <string>
#include <vector>

#include "pianogm/grid.hpp"
#include "pianogm/roll.hpp"

namespace pianogm {

enum class Articulation { kStaccato = 0, kLegato = 1 };
enum class Dynamics { kSoft = 0, kLoud = 1 };

struct VelocityRange {
  int low = 1;
  int high = 127;
};

struct StyleSpec {
  Articulation articulation = Articulation::kLegato;
  Dynamics dynamics = Dynamics::kLoud;
  double staccato_duration = 0.1;
  VelocityRange soft{30, 60};
  VelocityRange loud{85, 115};

  /// Requires soft.high <= 70 < loud.low and a staccato duration shorter
  /// than the inter-onset interval.
  void validate(double inter_onset_s) const;
  std::string cell_name() const;
};

/// Style cell for corpus index i: 0 staccato/soft, 1 staccato/loud,
/// 2 legato/soft, 3 legato/loud, repeating.
StyleSpec style_for_cell(int cell);

/// Additive toy-piano voice: harmonics 1..4 at 1/k amplitude, exponential
/// decay, linear release ramp ending at the note's offset.
struct ToyVoice {
  int harmonics = 4;
  double decay_per_second = 3.0;
  double release_s = 0.010;
  double max_amplitude = 0.5;
};

struct MelodyConfig {
  double inter_onset_s = 0.5;
  double lead_in_s = 0.25;
  int pitch_low = 48;
  int pitch_high = 84;
  int max_step = 4;
};

struct ToyPiece {
  std::vector<NoteEvent> events;
  std::vector<float> audio;
  StyleSpec style;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
};

double pitch_frequency(int pitch);

/// Renders one note of exactly round(duration_s * sample_rate) samples whose
/// peak magnitude is voice.max_amplitude * velocity / 127. Harmonics at or
/// above Nyquist are dropped.
std::vector<float> render_toy_note(int pitch, double duration_s, int velocity,
                                   const FrameGrid& grid, const ToyVoice& voice = {});

/// One piece; the melody and velocities depend only on `seed`, so the same
/// seed rendered in different styles shares its notes.
ToyPiece generate_piece(std::uint64_t seed, const StyleSpec& style, double piece_length_s,
                        const FrameGrid& grid, const MelodyConfig& melody = {},
                        const ToyVoice& voice = {});

/// n_pieces >= 4 pieces cycling through the four style cells.
std::vector<ToyPiece> generate_corpus(std::uint64_t seed, int n_pieces, double piece_length_s,
                                      const FrameGrid& grid, const MelodyConfig& melody = {},
                                      const ToyVoice& voice = {});

/// Seed of piece `index` within a corpus seeded with `corpus_seed`.
std::uint64_t piece_seed(std::uint64_t corpus_seed, int index);

/// Runs the representation pipeline (rolls, labels, Mel) on a toy piece.
PieceTensors featurize(const ToyPiece& piece, const FrameGrid& grid);

}  // namespace pianogm
