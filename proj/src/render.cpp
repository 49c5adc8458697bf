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

#include "pianogm/render.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace pianogm {

void MorphSpec::validate() const {
  auto check = [](int c, const char* what) {
    if (c != 0 && c != 1) throw std::invalid_argument(std::string(what) + " must be 0 or 1");
  };
  check(from_component, "from component");
  check(to_component, "to component");
  check(other_component, "other component");
  if (from_component == to_component) {
    throw std::invalid_argument("morph from component " + std::to_string(from_component) +
                                " to itself is a no-op");
  }
}

template <typename S>
LatentSequence<S> morph_latents(const MixturePrior<S>& prior, const MorphSpec& spec, int frames) {
  spec.validate();
  if (frames < 1) throw std::invalid_argument("morph_latents: need at least one frame");
  const Vector<S> from = prior.means.col(spec.from_component);
  const Vector<S> delta = prior.means.col(spec.to_component) - from;
  LatentSequence<S> z(prior.dim(), frames);
  for (int t = 0; t < frames; ++t) z.col(t) = from + delta * (static_cast<S>(t) / static_cast<S>(frames));
  return z;
}

template <typename S>
LatentSequence<S> blend_latents(const MixturePrior<S>& prior, int from_component, int to_component,
                                double alpha, int frames) {
  const Vector<S> from = prior.means.col(from_component);
  const Vector<S> point = from + (prior.means.col(to_component) - from) * static_cast<S>(alpha);
  return point.replicate(1, frames);
}

std::pair<LatentSequence<float>, LatentSequence<float>> morph_pair(const GmvaeModel<float>& model,
                                                                  const MorphSpec& spec, int frames) {
  const Factor other = spec.factor == Factor::kArticulation ? Factor::kDynamics : Factor::kArticulation;
  LatentSequence<float> moving = morph_latents(model.prior(spec.factor), spec, frames);
  LatentSequence<float> held;
  if (spec.other_latents) {
    if (spec.other_latents->rows() != model.config().latent_dim) {
      throw std::invalid_argument("morph: held trajectory has dimension " +
                                  std::to_string(spec.other_latents->rows()) + ", model uses " +
                                  std::to_string(model.config().latent_dim));
    }
    held = align_latents(*spec.other_latents, frames);
  } else {
    held = model.prior(other).means.col(spec.other_component).replicate(1, frames);
  }
  if (spec.factor == Factor::kArticulation) return {std::move(moving), std::move(held)};
  return {std::move(held), std::move(moving)};
}

InferredStyle infer_style(const GmvaeModel<float>& model, const MelSpectrogram& style, StyleMode mode,
                          std::uint64_t seed) {
  if (style.frames() == 0) throw std::invalid_argument("infer_style: empty style spectrogram");
  const Matrix<float> mel = style.data.transpose();
  const auto q_art = model.encode(mel, Factor::kArticulation);
  const auto q_dyn = model.encode(mel, Factor::kDynamics);
  InferredStyle out;
  out.length = style.frames();
  if (mode == StyleMode::kMean) {
    out.z_art = q_art.mean;
    out.z_dyn = q_dyn.mean;
  } else {
    std::mt19937_64 rng(seed);
    const auto noise = LatentNoise<float>::draw(model.config().latent_dim, out.length, rng);
    out.z_art = reparameterize(q_art, noise.art);
    out.z_dyn = reparameterize(q_dyn, noise.dyn);
  }
  return out;
}

template <typename S>
LatentSequence<S> align_latents(const LatentSequence<S>& z, int target_frames) {
  if (z.cols() == 0) throw std::invalid_argument("align_latents: empty latent sequence");
  if (target_frames < 1) throw std::invalid_argument("align_latents: target length must be positive");
  LatentSequence<S> out(z.rows(), target_frames);
  for (int t = 0; t < target_frames; ++t) {
    out.col(t) = z.col(static_cast<Eigen::Index>(static_cast<long long>(t) * z.cols() / target_frames));
  }
  return out;
}

MelSpectrogram synthesize(const GmvaeModel<float>& model, const OnsetRoll& onset,
                          const LatentSequence<float>& z_art, const LatentSequence<float>& z_dyn) {
  const int frames = onset.frames();
  const int dim = model.config().latent_dim;
  if (z_art.cols() != frames || z_dyn.cols() != frames) {
    throw std::invalid_argument("synthesize: onset roll has " + std::to_string(frames) +
                                " frames but latents have " + std::to_string(z_art.cols()) + "/" +
                                std::to_string(z_dyn.cols()) + "; align them first");
  }
  if (z_art.rows() != dim || z_dyn.rows() != dim) {
    throw std::invalid_argument("synthesize: latent dimension does not match the model");
  }
  const Matrix<float> y = onset.data.transpose().cast<float>();
  MelSpectrogram out;
  out.data = model.decode(y, z_art, z_dyn).transpose();
  return out;
}

double reconstruction_error(const MelSpectrogram& target, const MelSpectrogram& output) {
  if (target.frames() != output.frames() || target.bins() != output.bins()) {
    throw std::invalid_argument("reconstruction_error: shape mismatch");
  }
  if (target.frames() == 0) return 0.0;
  return (output.data.cast<double>() - target.data.cast<double>()).squaredNorm() / target.frames();
}

template LatentSequence<float> morph_latents(const MixturePrior<float>&, const MorphSpec&, int);
template LatentSequence<double> morph_latents(const MixturePrior<double>&, const MorphSpec&, int);
template LatentSequence<float> blend_latents(const MixturePrior<float>&, int, int, double, int);
template LatentSequence<double> blend_latents(const MixturePrior<double>&, int, int, double, int);
template LatentSequence<float> align_latents(const LatentSequence<float>&, int);
template LatentSequence<double> align_latents(const LatentSequence<double>&, int);

}  // namespace pianogm
