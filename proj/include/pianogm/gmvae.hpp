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

#include <array>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "pianogm/grid.hpp"

namespace pianogm {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Diagonal Gaussian.
template <typename S>
struct GaussianParams {
  Vector<S> mean;
  Vector<S> log_variance;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Per-frame diagonal Gaussians stored column-wise: D x T.
template <typename S>
struct GaussianSequence {
  Matrix<S> mean;
  Matrix<S> log_variance;

  int dim() const { return static_cast<int>(mean.rows()); }
  int frames() const { return static_cast<int>(mean.cols()); }
  GaussianParams<S> frame(int t) const { return {mean.col(t), log_variance.col(t)}; }
};

/// Latent trajectory, one D-dimensional column per frame.
template <typename S>
using LatentSequence = Matrix<S>;

/// Two-component diagonal Gaussian mixture; component c is the prior for
/// condition label c.
template <typename S>
struct MixturePrior {
  Matrix<S> means;          // D x 2
  Matrix<S> log_variances;  // D x 2
  std::array<S, 2> weights{S(0.5), S(0.5)};

  int dim() const { return static_cast<int>(means.rows()); }
  GaussianParams<S> component(int c) const { return {means.col(c), log_variances.col(c)}; }

  /// Means at -1 (component 0) and +1 (component 1) on every dimension,
  /// unit variances, uniform weights.
  static MixturePrior symmetric(int dim);
  void validate() const;
};

/// z = mean + exp(log_variance / 2) * noise, column-wise. Throws
/// std::invalid_argument when shapes disagree.
template <typename S>
LatentSequence<S> reparameterize(const GaussianSequence<S>& q, const Matrix<S>& noise);

/// Closed-form KL(q || p) for diagonal Gaussians, summed over dimensions.
template <typename S>
S kl_diag_gaussian(const GaussianParams<S>& q, const GaussianParams<S>& p);

/// p(z | c): the mixture component indexed by the label.
template <typename S>
GaussianParams<S> conditional_prior(int label, const MixturePrior<S>& prior);

/// log(weight_k) + log N(z; mean_k, var_k) for k = 0, 1.
template <typename S>
std::array<S, 2> component_log_joint(const Eigen::Ref<const Vector<S>>& z,
                                     const MixturePrior<S>& prior);

/// p(c = k | z) via log-sum-exp.
template <typename S>
std::array<S, 2> responsibilities(const Eigen::Ref<const Vector<S>>& z, const MixturePrior<S>& prior);

/// -(1/T) sum_t log p(c_t | z_t).
template <typename S>
S aux_ce_loss(const LatentSequence<S>& z, std::span<const std::uint8_t> labels,
              const MixturePrior<S>& prior);

template <typename S>
struct LossBreakdown {
  S recon{};
  S kl_art{};
  S kl_dyn{};
  S ce_art{};
  S ce_dyn{};
  S total{};
};

struct LossWeights {
  double beta = 1.0;    // KL weight
  double lambda = 1.0;  // auxiliary cross-entropy weight
  bool ce_gradient_to_latent = true;
};

/// Everything the loss needs for one set of frames. Frame-indexed matrices are
/// column-per-frame: X and X_hat are n_mels x N, posteriors and latents D x N.
template <typename S>
struct ElboInputs {
  const Matrix<S>* target = nullptr;
  const Matrix<S>* prediction = nullptr;
  const GaussianSequence<S>* q_art = nullptr;
  const GaussianSequence<S>* q_dyn = nullptr;
  const LatentSequence<S>* z_art = nullptr;
  const LatentSequence<S>* z_dyn = nullptr;
  std::span<const std::uint8_t> c_art;
  std::span<const std::uint8_t> c_dyn;
  const MixturePrior<S>* prior_art = nullptr;
  const MixturePrior<S>* prior_dyn = nullptr;
};

template <typename S>
struct FactorGradients {
  Matrix<S> d_mean;          // D x N, KL path only
  Matrix<S> d_log_variance;  // D x N, KL path only
  Matrix<S> d_latent;        // D x N, cross-entropy path
  Matrix<S> d_prior_means;   // D x 2
  Matrix<S> d_prior_log_variances;
};

template <typename S>
struct ElboGradients {
  Matrix<S> d_prediction;  // n_mels x N
  FactorGradients<S> art;
  FactorGradients<S> dyn;
};

/// Raised when a loss input or term is not finite; names the offending term.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string& term, const std::string& detail)
      : std::runtime_error("non-finite " + term + ": " + detail), term_(term) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

/// Negative penalised evidence lower bound, up to additive constants:
/// recon   = mean over frames of the squared error summed over Mel bins;
/// kl_*    = mean over frames of KL(q_t || p(z | c_t));
/// ce_*    = mean over frames of -log p(c_t | z_t);
/// total   = recon + beta (kl_art + kl_dyn) + lambda (ce_art + ce_dyn).
/// When `grads` is non-null it receives d total / d every input.
template <typename S>
LossBreakdown<S> elbo_loss(const ElboInputs<S>& in, const LossWeights& weights,
                           ElboGradients<S>* grads = nullptr);

/// Adds the reparameterisation path: given dL/dz, accumulates dL/dmean and
/// dL/dlog_variance for z = mean + exp(lv/2) * noise.
template <typename S>
void reparameterize_backward(const GaussianSequence<S>& q, const Matrix<S>& noise,
                             const Matrix<S>& d_latent, Matrix<S>& d_mean,
                             Matrix<S>& d_log_variance);

}  // namespace pianogm
