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
#include <random>
#include <string>
#include <vector>

#include "pianogm/gmvae.hpp"
#include "pianogm/lstm.hpp"

namespace pianogm {

struct ModelConfig {
  int latent_dim = 16;
  int encoder_hidden = 128;
  int decoder_hidden = 128;
  int num_layers = 2;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class Factor { kArticulation, kDynamics };

std::string factor_name(Factor f);
Factor parse_factor(const std::string& name);

/// A batch of B equal-length crops laid out time-major (column t * B + b).
template <typename S>
struct SequenceBatch {
  Matrix<S> mel;    // 80 x N, log-Mel
  Matrix<S> onset;  // 88 x N
  LabelSequence c_art;
  LabelSequence c_dyn;
  int batch = 1;

  int columns() const { return static_cast<int>(mel.cols()); }
  int frames() const { return columns() / batch; }
};

/// Bidirectional recurrent posterior network q(z | X) with mean and
/// log-variance heads.
template <typename S>
class Encoder {
 public:
  struct Cache {
    typename BiLstm<S>::Cache rnn;
  };

  Encoder() = default;
  Encoder(const std::string& name, int hidden, int layers, int latent_dim);

  void init(std::mt19937_64& rng);
  GaussianSequence<S> forward(const Matrix<S>& normalized_mel, int batch, Cache& cache) const;
  void backward(int batch, const Cache& cache, const Matrix<S>& d_mean,
                const Matrix<S>& d_log_variance);
  void collect(ParameterList<S>& out);

 private:
  BiLstm<S> rnn_;
  Linear<S> mean_head_;
  Linear<S> log_variance_head_;
};

/// Generation network p(X | Y_onset, z_art, z_dyn): per-frame concatenation
/// [onset; z_art; z_dyn] -> bidirectional recurrence -> 80 bins.
template <typename S>
class Decoder {
 public:
  struct Cache {
    Matrix<S> input;
    typename BiLstm<S>::Cache rnn;
  };

  Decoder() = default;
  Decoder(const std::string& name, int hidden, int layers, int latent_dim);

  void init(std::mt19937_64& rng);
  /// Output in normalised feature units.
  Matrix<S> forward(const Matrix<S>& onset, const Matrix<S>& z_art, const Matrix<S>& z_dyn,
                    int batch, Cache& cache) const;
  /// Returns d/d[z_art; z_dyn] stacked (2D x N).
  Matrix<S> backward(int batch, const Cache& cache, const Matrix<S>& d_output);
  void collect(ParameterList<S>& out);

 private:
  int latent_dim_ = 0;
  BiLstm<S> rnn_;
  Linear<S> output_;
};

/// Standard-normal draws for both factors (D x N each).
template <typename S>
struct LatentNoise {
  Matrix<S> art;
  Matrix<S> dyn;

  static LatentNoise draw(int dim, int columns, std::mt19937_64& rng);
  static LatentNoise zeros(int dim, int columns);
};

/// Everything produced by one forward pass; kept for backpropagation.
template <typename S>
struct ForwardPass {
  typename Encoder<S>::Cache enc_art_cache;
  typename Encoder<S>::Cache enc_dyn_cache;
  typename Decoder<S>::Cache dec_cache;
  GaussianSequence<S> q_art;
  GaussianSequence<S> q_dyn;
  LatentSequence<S> z_art;
  LatentSequence<S> z_dyn;
  Matrix<S> prediction;  // 80 x N, log-Mel units
};

/// Conditional GM-VAE: two factor encoders, one decoder, one two-component
/// mixture prior per factor, plus fixed per-bin feature normalisation.
template <typename S>
class GmvaeModel {
 public:
  GmvaeModel() = default;
  explicit GmvaeModel(const ModelConfig& config);

  /// Random weights from `seed`; priors at their symmetric initialisation.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterList<S> parameters();
  std::vector<const Parameter<S>*> parameters() const;
  void zero_grad();

  MixturePrior<S> prior(Factor f) const;
  MixturePrior<S> prior_art() const { return prior(Factor::kArticulation); }
  MixturePrior<S> prior_dyn() const { return prior(Factor::kDynamics); }

  /// Per-bin affine normalisation applied to encoder inputs and inverted on
  /// decoder outputs. Not trained.
  void set_feature_normalization(const Vector<S>& mean, const Vector<S>& scale);
  const Vector<S>& feature_mean() const { return feature_mean_; }
  const Vector<S>& feature_scale() const { return feature_scale_; }

  GaussianSequence<S> encode(const Matrix<S>& mel, Factor which, int batch = 1) const;
  Matrix<S> decode(const Matrix<S>& onset, const LatentSequence<S>& z_art,
                   const LatentSequence<S>& z_dyn, int batch = 1) const;

  /// Encoder -> reparameterised latents -> decoder.
  ForwardPass<S> forward(const SequenceBatch<S>& batch, const LatentNoise<S>& noise) const;

  /// Loss of a batch; with `accumulate_gradients` adds d total / d params to
  /// every parameter's grad.
  LossBreakdown<S> loss(const SequenceBatch<S>& batch, const LatentNoise<S>& noise,
                        const LossWeights& weights, bool accumulate_gradients);

  /// Loss with accumulated gradients, also returning the forward pass.
  LossBreakdown<S> loss_and_backward(const SequenceBatch<S>& batch, const LatentNoise<S>& noise,
                                     const LossWeights& weights, ForwardPass<S>& pass);

 private:
  Matrix<S> normalize(const Matrix<S>& mel) const;
  Matrix<S> denormalize(const Matrix<S>& y) const;

  ModelConfig config_;
  Encoder<S> enc_art_;
  Encoder<S> enc_dyn_;
  Decoder<S> decoder_;
  Parameter<S> prior_art_means_;
  Parameter<S> prior_art_log_variances_;
  Parameter<S> prior_dyn_means_;
  Parameter<S> prior_dyn_log_variances_;
  Vector<S> feature_mean_;
  Vector<S> feature_scale_;
};

/// Copies values between precisions (parameter names must match).
template <typename To, typename From>
GmvaeModel<To> convert_model(const GmvaeModel<From>& model);

}  // namespace pianogm
