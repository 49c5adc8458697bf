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

#include "pianogm/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "pianogm/piece_archive.hpp"
#include "pianogm/spectrogram.hpp"

namespace pianogm {

void StyleSpec::validate(double inter_onset_s) const {
  if (soft.low < 1 || soft.low > soft.high || loud.low > loud.high || loud.high > 127) {
    throw std::invalid_argument("velocity ranges must be ordered within [1, 127]");
  }
  if (!(soft.high <= kLoudVelocityThreshold && loud.low > kLoudVelocityThreshold)) {
    throw std::invalid_argument("soft velocities must be <= 70 and loud velocities > 70");
  }
  if (!(staccato_duration > 0.0 && staccato_duration < inter_onset_s)) {
    throw std::invalid_argument("staccato duration must be positive and below the inter-onset interval");
  }
}

std::string StyleSpec::cell_name() const {
  return std::string(articulation == Articulation::kStaccato ? "staccato" : "legato") + "-" +
         (dynamics == Dynamics::kSoft ? "soft" : "loud");
}

StyleSpec style_for_cell(int cell) {
  StyleSpec style;
  style.articulation = (cell % 4) >= 2 ? Articulation::kLegato : Articulation::kStaccato;
  style.dynamics = (cell % 2) == 1 ? Dynamics::kLoud : Dynamics::kSoft;
  return style;
}

double pitch_frequency(int pitch) { return 440.0 * std::pow(2.0, (pitch - 69) / 12.0); }

std::vector<float> render_toy_note(int pitch, double duration_s, int velocity,
                                   const FrameGrid& grid, const ToyVoice& voice) {
  if (pitch < kLowestPitch || pitch > kHighestPitch) {
    throw std::invalid_argument("render_toy_note: pitch outside the piano range");
  }
  if (!(duration_s > 0.0)) throw std::invalid_argument("render_toy_note: duration must be positive");
  const double sr = grid.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sr));
  const double f0 = pitch_frequency(pitch);
  const auto ramp = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(voice.release_s * sr)));

  std::vector<double> wave(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / sr;
    double s = 0.0;
    for (int k = 1; k <= voice.harmonics; ++k) {
      if (k * f0 >= sr / 2.0) break;
      s += std::sin(2.0 * std::numbers::pi * k * f0 * t) / k;
    }
    double env = std::exp(-voice.decay_per_second * t);
    const std::size_t remaining = n - i;
    if (remaining <= ramp) env *= static_cast<double>(remaining - 1) / ramp;
    wave[i] = s * env;
  }
  double peak = 0.0;
  for (double v : wave) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? voice.max_amplitude * velocity / 127.0 / peak : 0.0;
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(wave[i] * gain);
  return out;
}

std::uint64_t piece_seed(std::uint64_t corpus_seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(corpus_seed),
                    static_cast<std::uint32_t>(corpus_seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

ToyPiece generate_piece(std::uint64_t seed, const StyleSpec& style, double piece_length_s,
                        const FrameGrid& grid, const MelodyConfig& melody,
                        const ToyVoice& voice) {
  style.validate(melody.inter_onset_s);
  grid.validate();
  const int notes = static_cast<int>(
      std::floor((piece_length_s - melody.lead_in_s) / melody.inter_onset_s + 1e-9));
  if (notes < 1) throw std::invalid_argument("generate_piece: piece too short for one note");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> start(melody.pitch_low, melody.pitch_high);
  std::uniform_int_distribution<int> step(-melody.max_step, melody.max_step);
  // Velocities are drawn as a fraction of the range so that the soft and loud
  // renderings of one seed share their relative accents.
  std::uniform_real_distribution<double> accent(0.0, 1.0);

  const VelocityRange range = style.dynamics == Dynamics::kLoud ? style.loud : style.soft;
  ToyPiece piece;
  piece.style = style;
  piece.seed = seed;
  piece.duration_s = piece_length_s;
  int pitch = start(rng);
  for (int i = 0; i < notes; ++i) {
    if (i > 0) {
      pitch += step(rng);
      if (pitch > melody.pitch_high) pitch = 2 * melody.pitch_high - pitch;
      if (pitch < melody.pitch_low) pitch = 2 * melody.pitch_low - pitch;
    }
    const double a = accent(rng);
    const int velocity =
        std::min(range.high, range.low + static_cast<int>(a * (range.high - range.low + 1)));
    const double onset = melody.lead_in_s + i * melody.inter_onset_s;
    const double length = style.articulation == Articulation::kLegato ? melody.inter_onset_s
                                                                       : style.staccato_duration;
    piece.events.push_back({pitch, onset, onset + length, velocity});
  }

  piece.audio.assign(static_cast<std::size_t>(std::lround(piece_length_s * grid.sample_rate)), 0.0f);
  for (const auto& note : piece.events) {
    const auto wave = render_toy_note(note.pitch, note.offset - note.onset, note.velocity, grid, voice);
    const auto first = static_cast<std::size_t>(std::lround(note.onset * grid.sample_rate));
    for (std::size_t i = 0; i < wave.size() && first + i < piece.audio.size(); ++i) {
      piece.audio[first + i] += wave[i];
    }
  }
  return piece;
}

std::vector<ToyPiece> generate_corpus(std::uint64_t seed, int n_pieces, double piece_length_s,
                                      const FrameGrid& grid, const MelodyConfig& melody,
                                      const ToyVoice& voice) {
  if (n_pieces < 4) throw std::invalid_argument("generate_corpus: need at least 4 pieces");
  std::vector<ToyPiece> corpus;
  corpus.reserve(n_pieces);
  for (int i = 0; i < n_pieces; ++i) {
    corpus.push_back(
        generate_piece(piece_seed(seed, i), style_for_cell(i), piece_length_s, grid, melody, voice));
  }
  return corpus;
}

PieceTensors featurize(const ToyPiece& piece, const FrameGrid& grid) {
  return featurize_performance(piece.events, piece.audio, grid.sample_rate, piece.duration_s, grid);
}

}  // namespace pianogm
