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

#include "pianogm/networks.hpp"

#include <stdexcept>

namespace pianogm {

void ModelConfig::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (encoder_hidden < latent_dim) throw std::invalid_argument("encoder_hidden must be >= latent_dim");
  if (decoder_hidden < 1) throw std::invalid_argument("decoder_hidden must be >= 1");
  if (num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
}

std::string factor_name(Factor f) { return f == Factor::kArticulation ? "art" : "dyn"; }

Factor parse_factor(const std::string& name) {
  if (name == "art" || name == "articulation") return Factor::kArticulation;
  if (name == "dyn" || name == "dynamics") return Factor::kDynamics;
  throw std::invalid_argument("unknown factor '" + name + "' (expected art or dyn)");
}

template <typename S>
Encoder<S>::Encoder(const std::string& name, int hidden, int layers, int latent_dim)
    : rnn_(name + ".rnn", kNumMels, hidden, layers),
      mean_head_(name + ".mean", 2 * hidden, latent_dim),
      log_variance_head_(name + ".log_variance", 2 * hidden, latent_dim) {}

template <typename S>
void Encoder<S>::init(std::mt19937_64& rng) {
  rnn_.init(rng);
  mean_head_.init(rng);
  log_variance_head_.init(rng);
}

template <typename S>
GaussianSequence<S> Encoder<S>::forward(const Matrix<S>& normalized_mel, int batch,
                                        Cache& cache) const {
  if (normalized_mel.rows() != kNumMels) throw std::invalid_argument("encoder expects 80 Mel bins");
  if (normalized_mel.cols() == 0) throw std::invalid_argument("encoder input has no frames");
  const Matrix<S>& features = rnn_.forward(normalized_mel, batch, cache.rnn);
  return {mean_head_.forward(features), log_variance_head_.forward(features)};
}

template <typename S>
void Encoder<S>::backward(int batch, const Cache& cache, const Matrix<S>& d_mean,
                          const Matrix<S>& d_log_variance) {
  const Matrix<S>& features = cache.rnn.output;
  Matrix<S> d_features = mean_head_.backward(features, d_mean);
  d_features += log_variance_head_.backward(features, d_log_variance);
  rnn_.backward(batch, cache.rnn, d_features);
}

template <typename S>
void Encoder<S>::collect(ParameterList<S>& out) {
  rnn_.collect(out);
  mean_head_.collect(out);
  log_variance_head_.collect(out);
}

template <typename S>
Decoder<S>::Decoder(const std::string& name, int hidden, int layers, int latent_dim)
    : latent_dim_(latent_dim),
      rnn_(name + ".rnn", kNumPitches + 2 * latent_dim, hidden, layers),
      output_(name + ".output", 2 * hidden, kNumMels) {}

template <typename S>
void Decoder<S>::init(std::mt19937_64& rng) {
  rnn_.init(rng);
  output_.init(rng);
}

template <typename S>
Matrix<S> Decoder<S>::forward(const Matrix<S>& onset, const Matrix<S>& z_art,
                              const Matrix<S>& z_dyn, int batch, Cache& cache) const {
  const auto n = onset.cols();
  if (onset.rows() != kNumPitches) throw std::invalid_argument("decoder expects an 88-row onset roll");
  if (z_art.cols() != n || z_dyn.cols() != n) {
    throw std::invalid_argument("decoder: frame count mismatch (onset=" + std::to_string(n) +
                                ", z_art=" + std::to_string(z_art.cols()) +
                                ", z_dyn=" + std::to_string(z_dyn.cols()) + ")");
  }
  if (z_art.rows() != latent_dim_ || z_dyn.rows() != latent_dim_) {
    throw std::invalid_argument("decoder: latent dimension mismatch");
  }
  if (n == 0) throw std::invalid_argument("decoder input has no frames");
  cache.input.resize(kNumPitches + 2 * latent_dim_, n);
  cache.input.topRows(kNumPitches) = onset;
  cache.input.middleRows(kNumPitches, latent_dim_) = z_art;
  cache.input.bottomRows(latent_dim_) = z_dyn;
  return output_.forward(rnn_.forward(cache.input, batch, cache.rnn));
}

template <typename S>
Matrix<S> Decoder<S>::backward(int batch, const Cache& cache, const Matrix<S>& d_output) {
  const Matrix<S> d_features = output_.backward(cache.rnn.output, d_output);
  const Matrix<S> d_input = rnn_.backward(batch, cache.rnn, d_features);
  return d_input.bottomRows(2 * latent_dim_);
}

template <typename S>
void Decoder<S>::collect(ParameterList<S>& out) {
  rnn_.collect(out);
  output_.collect(out);
}

template <typename S>
LatentNoise<S> LatentNoise<S>::draw(int dim, int columns, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentNoise<S> noise;
  noise.art.resize(dim, columns);
  noise.dyn.resize(dim, columns);
  for (int j = 0; j < columns; ++j) {
    for (int i = 0; i < dim; ++i) noise.art(i, j) = static_cast<S>(normal(rng));
  }
  for (int j = 0; j < columns; ++j) {
    for (int i = 0; i < dim; ++i) noise.dyn(i, j) = static_cast<S>(normal(rng));
  }
  return noise;
}

template <typename S>
LatentNoise<S> LatentNoise<S>::zeros(int dim, int columns) {
  return {Matrix<S>::Zero(dim, columns), Matrix<S>::Zero(dim, columns)};
}

template <typename S>
GmvaeModel<S>::GmvaeModel(const ModelConfig& config)
    : config_(config),
      enc_art_("enc_art", config.encoder_hidden, config.num_layers, config.latent_dim),
      enc_dyn_("enc_dyn", config.encoder_hidden, config.num_layers, config.latent_dim),
      decoder_("decoder", config.decoder_hidden, config.num_layers, config.latent_dim),
      prior_art_means_("prior_art.means", config.latent_dim, 2),
      prior_art_log_variances_("prior_art.log_variances", config.latent_dim, 2),
      prior_dyn_means_("prior_dyn.means", config.latent_dim, 2),
      prior_dyn_log_variances_("prior_dyn.log_variances", config.latent_dim, 2),
      feature_mean_(Vector<S>::Zero(kNumMels)),
      feature_scale_(Vector<S>::Ones(kNumMels)) {
  config.validate();
  const auto symmetric = MixturePrior<S>::symmetric(config.latent_dim);
  prior_art_means_.value = prior_dyn_means_.value = symmetric.means;
  prior_art_log_variances_.value = prior_dyn_log_variances_.value = symmetric.log_variances;
}

template <typename S>
void GmvaeModel<S>::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  enc_art_.init(rng);
  enc_dyn_.init(rng);
  decoder_.init(rng);
  const auto symmetric = MixturePrior<S>::symmetric(config_.latent_dim);
  prior_art_means_.value = prior_dyn_means_.value = symmetric.means;
  prior_art_log_variances_.value = prior_dyn_log_variances_.value = symmetric.log_variances;
}

template <typename S>
ParameterList<S> GmvaeModel<S>::parameters() {
  ParameterList<S> out;
  enc_art_.collect(out);
  enc_dyn_.collect(out);
  decoder_.collect(out);
  out.push_back(&prior_art_means_);
  out.push_back(&prior_art_log_variances_);
  out.push_back(&prior_dyn_means_);
  out.push_back(&prior_dyn_log_variances_);
  return out;
}

template <typename S>
std::vector<const Parameter<S>*> GmvaeModel<S>::parameters() const {
  auto mutable_list = const_cast<GmvaeModel<S>*>(this)->parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

template <typename S>
void GmvaeModel<S>::zero_grad() {
  for (auto* p : parameters()) p->grad.setZero();
}

template <typename S>
MixturePrior<S> GmvaeModel<S>::prior(Factor f) const {
  MixturePrior<S> p;
  if (f == Factor::kArticulation) {
    p.means = prior_art_means_.value;
    p.log_variances = prior_art_log_variances_.value;
  } else {
    p.means = prior_dyn_means_.value;
    p.log_variances = prior_dyn_log_variances_.value;
  }
  return p;
}

template <typename S>
void GmvaeModel<S>::set_feature_normalization(const Vector<S>& mean, const Vector<S>& scale) {
  if (mean.size() != kNumMels || scale.size() != kNumMels || (scale.array() <= S(0)).any()) {
    throw std::invalid_argument("feature normalisation needs 80 means and 80 positive scales");
  }
  feature_mean_ = mean;
  feature_scale_ = scale;
}

template <typename S>
Matrix<S> GmvaeModel<S>::normalize(const Matrix<S>& mel) const {
  if (mel.rows() != kNumMels) throw std::invalid_argument("expected 80 Mel bins");
  return (mel.colwise() - feature_mean_).array().colwise() / feature_scale_.array();
}

template <typename S>
Matrix<S> GmvaeModel<S>::denormalize(const Matrix<S>& y) const {
  return (y.array().colwise() * feature_scale_.array()).matrix().colwise() + feature_mean_;
}

template <typename S>
GaussianSequence<S> GmvaeModel<S>::encode(const Matrix<S>& mel, Factor which, int batch) const {
  typename Encoder<S>::Cache cache;
  const auto& encoder = which == Factor::kArticulation ? enc_art_ : enc_dyn_;
  return encoder.forward(normalize(mel), batch, cache);
}

template <typename S>
Matrix<S> GmvaeModel<S>::decode(const Matrix<S>& onset, const LatentSequence<S>& z_art,
                                const LatentSequence<S>& z_dyn, int batch) const {
  typename Decoder<S>::Cache cache;
  return denormalize(decoder_.forward(onset, z_art, z_dyn, batch, cache));
}

template <typename S>
ForwardPass<S> GmvaeModel<S>::forward(const SequenceBatch<S>& batch,
                                      const LatentNoise<S>& noise) const {
  if (batch.mel.cols() != batch.onset.cols()) {
    throw std::invalid_argument("batch: mel and onset frame counts differ");
  }
  ForwardPass<S> pass;
  const Matrix<S> input = normalize(batch.mel);
  pass.q_art = enc_art_.forward(input, batch.batch, pass.enc_art_cache);
  pass.q_dyn = enc_dyn_.forward(input, batch.batch, pass.enc_dyn_cache);
  pass.z_art = reparameterize(pass.q_art, noise.art);
  pass.z_dyn = reparameterize(pass.q_dyn, noise.dyn);
  pass.prediction =
      denormalize(decoder_.forward(batch.onset, pass.z_art, pass.z_dyn, batch.batch, pass.dec_cache));
  return pass;
}

template <typename S>
LossBreakdown<S> GmvaeModel<S>::loss(const SequenceBatch<S>& batch, const LatentNoise<S>& noise,
                                     const LossWeights& weights, bool accumulate_gradients) {
  if (accumulate_gradients) {
    ForwardPass<S> pass;
    return loss_and_backward(batch, noise, weights, pass);
  }
  const ForwardPass<S> pass = forward(batch, noise);
  const auto prior_art = this->prior_art();
  const auto prior_dyn = this->prior_dyn();
  ElboInputs<S> in{&batch.mel,   &pass.prediction, &pass.q_art, &pass.q_dyn,
                   &pass.z_art,  &pass.z_dyn,      batch.c_art, batch.c_dyn,
                   &prior_art,   &prior_dyn};
  return elbo_loss(in, weights);
}

template <typename S>
LossBreakdown<S> GmvaeModel<S>::loss_and_backward(const SequenceBatch<S>& batch,
                                                  const LatentNoise<S>& noise,
                                                  const LossWeights& weights,
                                                  ForwardPass<S>& pass) {
  pass = forward(batch, noise);
  const auto prior_art = this->prior_art();
  const auto prior_dyn = this->prior_dyn();
  ElboInputs<S> in{&batch.mel,   &pass.prediction, &pass.q_art, &pass.q_dyn,
                   &pass.z_art,  &pass.z_dyn,      batch.c_art, batch.c_dyn,
                   &prior_art,   &prior_dyn};
  ElboGradients<S> grads;
  const auto breakdown = elbo_loss(in, weights, &grads);

  const Matrix<S> d_output = grads.d_prediction.array().colwise() * feature_scale_.array();
  const Matrix<S> d_latents = decoder_.backward(batch.batch, pass.dec_cache, d_output);
  const int dim = config_.latent_dim;

  auto factor_backward = [&](Encoder<S>& encoder, typename Encoder<S>::Cache& cache,
                             const GaussianSequence<S>& q, const Matrix<S>& eps,
                             FactorGradients<S>& g, const Matrix<S>& d_z_decoder,
                             Parameter<S>& means, Parameter<S>& log_variances) {
    const Matrix<S> d_z = d_z_decoder + g.d_latent;
    reparameterize_backward(q, eps, d_z, g.d_mean, g.d_log_variance);
    encoder.backward(batch.batch, cache, g.d_mean, g.d_log_variance);
    means.grad += g.d_prior_means;
    log_variances.grad += g.d_prior_log_variances;
  };
  factor_backward(enc_art_, pass.enc_art_cache, pass.q_art, noise.art, grads.art,
                  d_latents.topRows(dim), prior_art_means_, prior_art_log_variances_);
  factor_backward(enc_dyn_, pass.enc_dyn_cache, pass.q_dyn, noise.dyn, grads.dyn,
                  d_latents.bottomRows(dim), prior_dyn_means_, prior_dyn_log_variances_);
  return breakdown;
}

template <typename To, typename From>
GmvaeModel<To> convert_model(const GmvaeModel<From>& model) {
  GmvaeModel<To> out(model.config());
  auto dst = out.parameters();
  const auto src = model.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (dst[i]->name != src[i]->name) throw std::logic_error("convert_model: parameter layout mismatch");
    dst[i]->value = src[i]->value.template cast<To>();
  }
  out.set_feature_normalization(model.feature_mean().template cast<To>(),
                                model.feature_scale().template cast<To>());
  return out;
}

template class Encoder<float>;
template class Encoder<double>;
template class Decoder<float>;
template class Decoder<double>;
template struct LatentNoise<float>;
template struct LatentNoise<double>;
template class GmvaeModel<float>;
template class GmvaeModel<double>;
template GmvaeModel<double> convert_model<double, float>(const GmvaeModel<float>&);
template GmvaeModel<float> convert_model<float, double>(const GmvaeModel<double>&);

}  // namespace pianogm
