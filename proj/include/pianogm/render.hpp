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
#include <optional>
#include <utility>

#include "pianogm/networks.hpp"

namespace pianogm {

/// One factor travels from one mixture component mean to the other; the other
/// factor is held at a component mean or follows a supplied trajectory.
struct MorphSpec {
  Factor factor = Factor::kArticulation;
  int from_component = 0;
  int to_component = 1;
  int other_component = 1;
  std::optional<LatentSequence<float>> other_latents;

  /// Throws std::invalid_argument for from == to or components outside {0, 1}.
  void validate() const;
};

/// z_t = mu_from + (mu_to - mu_from) * t / T for t = 0..T-1.
template <typename S>
LatentSequence<S> morph_latents(const MixturePrior<S>& prior, const MorphSpec& spec, int frames);

/// Both trajectories for a morph render: (z_art, z_dyn).
std::pair<LatentSequence<float>, LatentSequence<float>> morph_pair(const GmvaeModel<float>& model,
                                                                  const MorphSpec& spec, int frames);

/// T copies of mu_from + alpha * (mu_to - mu_from).
template <typename S>
LatentSequence<S> blend_latents(const MixturePrior<S>& prior, int from_component, int to_component,
                                double alpha, int frames);

enum class StyleMode { kMean, kSample };

struct InferredStyle {
  LatentSequence<float> z_art;
  LatentSequence<float> z_dyn;
  int length = 0;  // frames of the style piece
};

/// Posterior means, or seeded reparameterised draws, for every frame of the
/// style spectrogram.
InferredStyle infer_style(const GmvaeModel<float>& model, const MelSpectrogram& style, StyleMode mode,
                          std::uint64_t seed = 0);

/// Nearest-neighbour frame resampling: column t of the result is column
/// floor(t * T / target) of z.
template <typename S>
LatentSequence<S> align_latents(const LatentSequence<S>& z, int target_frames);

/// Decoder forward pass on an onset roll. Throws std::invalid_argument when
/// the latent lengths or dimensions do not match.
MelSpectrogram synthesize(const GmvaeModel<float>& model, const OnsetRoll& onset,
                          const LatentSequence<float>& z_art, const LatentSequence<float>& z_dyn);

/// Same reconstruction term as the training loss: squared error summed over
/// bins, averaged over frames.
double reconstruction_error(const MelSpectrogram& target, const MelSpectrogram& output);

}  // namespace pianogm
