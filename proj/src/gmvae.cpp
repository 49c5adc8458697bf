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

#include "pianogm/gmvae.hpp"

#include <cmath>
#include <numbers>

namespace pianogm {

namespace {

template <typename S>
void require_finite(const Matrix<S>& m, const std::string& term) {
  if (!m.allFinite()) throw NonFiniteLoss(term, "input contains NaN or Inf");
}

void require_shape(long rows, long cols, long want_rows, long want_cols, const std::string& what) {
  if (rows != want_rows || cols != want_cols) {
    throw std::invalid_argument(what + ": expected " + std::to_string(want_rows) + "x" +
                                std::to_string(want_cols) + " but got " + std::to_string(rows) +
                                "x" + std::to_string(cols));
  }
}

}  // namespace

template <typename S>
MixturePrior<S> MixturePrior<S>::symmetric(int dim) {
  MixturePrior<S> prior;
  prior.means.resize(dim, 2);
  prior.means.col(0).setConstant(S(-1));
  prior.means.col(1).setConstant(S(1));
  prior.log_variances = Matrix<S>::Zero(dim, 2);
  return prior;
}

template <typename S>
void MixturePrior<S>::validate() const {
  if (means.cols() != 2 || log_variances.cols() != 2 || means.rows() != log_variances.rows()) {
    throw std::invalid_argument("mixture prior must have exactly two D-dimensional components");
  }
  if (std::abs(static_cast<double>(weights[0] + weights[1]) - 1.0) > 1e-6 || weights[0] <= 0 ||
      weights[1] <= 0) {
    throw std::invalid_argument("mixture weights must be positive and sum to 1");
  }
}

template <typename S>
LatentSequence<S> reparameterize(const GaussianSequence<S>& q, const Matrix<S>& noise) {
  require_shape(q.log_variance.rows(), q.log_variance.cols(), q.mean.rows(), q.mean.cols(),
                "reparameterize log_variance");
  require_shape(noise.rows(), noise.cols(), q.mean.rows(), q.mean.cols(), "reparameterize noise");
  return q.mean.array() + (S(0.5) * q.log_variance.array()).exp() * noise.array();
}

template <typename S>
void reparameterize_backward(const GaussianSequence<S>& q, const Matrix<S>& noise,
                             const Matrix<S>& d_latent, Matrix<S>& d_mean,
                             Matrix<S>& d_log_variance) {
  d_mean += d_latent;
  d_log_variance.array() +=
      d_latent.array() * S(0.5) * (S(0.5) * q.log_variance.array()).exp() * noise.array();
}

template <typename S>
S kl_diag_gaussian(const GaussianParams<S>& q, const GaussianParams<S>& p) {
  if (q.dim() != p.dim()) throw std::invalid_argument("kl_diag_gaussian: dimension mismatch");
  double kl = 0.0;
  for (int d = 0; d < q.dim(); ++d) {
    const double lvq = q.log_variance[d], lvp = p.log_variance[d];
    const double diff = static_cast<double>(q.mean[d]) - p.mean[d];
    kl += 0.5 * ((lvp - lvq) + (std::exp(lvq) + diff * diff) * std::exp(-lvp) - 1.0);
  }
  // Round-off can leave tiny negatives when q == p.
  return static_cast<S>(std::max(kl, 0.0));
}

template <typename S>
GaussianParams<S> conditional_prior(int label, const MixturePrior<S>& prior) {
  if (label != 0 && label != 1) throw std::invalid_argument("condition label must be 0 or 1");
  return prior.component(label);
}

template <typename S>
std::array<S, 2> component_log_joint(const Eigen::Ref<const Vector<S>>& z,
                                     const MixturePrior<S>& prior) {
  constexpr double kLog2Pi = 1.8378770664093453;
  std::array<S, 2> out{};
  for (int k = 0; k < 2; ++k) {
    double acc = std::log(static_cast<double>(prior.weights[k]));
    for (int d = 0; d < z.size(); ++d) {
      const double lv = prior.log_variances(d, k);
      const double diff = static_cast<double>(z[d]) - prior.means(d, k);
      acc -= 0.5 * (kLog2Pi + lv + diff * diff * std::exp(-lv));
    }
    out[k] = static_cast<S>(acc);
  }
  return out;
}

namespace {

// log p(c = k | z) for both k, in double.
template <typename S>
std::array<double, 2> log_posterior(const Eigen::Ref<const Vector<S>>& z,
                                    const MixturePrior<S>& prior) {
  const auto joint = component_log_joint<S>(z, prior);
  const double a = joint[0], b = joint[1];
  const double m = std::max(a, b);
  const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
  return {a - lse, b - lse};
}

}  // namespace

template <typename S>
std::array<S, 2> responsibilities(const Eigen::Ref<const Vector<S>>& z,
                                  const MixturePrior<S>& prior) {
  const auto lp = log_posterior<S>(z, prior);
  return {static_cast<S>(std::exp(lp[0])), static_cast<S>(std::exp(lp[1]))};
}

template <typename S>
S aux_ce_loss(const LatentSequence<S>& z, std::span<const std::uint8_t> labels,
              const MixturePrior<S>& prior) {
  if (static_cast<std::size_t>(z.cols()) != labels.size()) {
    throw std::invalid_argument("aux_ce_loss: label count does not match frames");
  }
  if (z.cols() == 0) return S(0);
  double acc = 0.0;
  for (int t = 0; t < z.cols(); ++t) {
    acc -= log_posterior<S>(z.col(t), prior)[labels[t]];
  }
  return static_cast<S>(acc / z.cols());
}

namespace {

template <typename S>
struct FactorTerms {
  double kl = 0.0;
  double ce = 0.0;
};

template <typename S>
FactorTerms<S> factor_terms(const GaussianSequence<S>& q, const LatentSequence<S>& z,
                            std::span<const std::uint8_t> labels, const MixturePrior<S>& prior,
                            const LossWeights& weights, FactorGradients<S>* grad) {
  const int n = q.frames();
  const int dim = q.dim();
  const double inv_n = 1.0 / n;
  FactorTerms<S> terms;
  if (grad) {
    grad->d_mean = Matrix<S>::Zero(dim, n);
    grad->d_log_variance = Matrix<S>::Zero(dim, n);
    grad->d_latent = Matrix<S>::Zero(dim, n);
    grad->d_prior_means = Matrix<S>::Zero(dim, 2);
    grad->d_prior_log_variances = Matrix<S>::Zero(dim, 2);
  }
  // Accumulate prior gradients in double; they sum over every frame.
  Eigen::MatrixXd dpm = Eigen::MatrixXd::Zero(dim, 2);
  Eigen::MatrixXd dplv = Eigen::MatrixXd::Zero(dim, 2);
  Eigen::MatrixXd prior_inv_var = (-prior.log_variances.template cast<double>()).array().exp();

  for (int t = 0; t < n; ++t) {
    const int c = labels[t];
    if (c != 0 && c != 1) throw std::invalid_argument("condition labels must be 0 or 1");
    double kl = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double lvq = q.log_variance(d, t);
      const double vq = std::exp(lvq);
      const double lvp = prior.log_variances(d, c);
      const double ivp = prior_inv_var(d, c);
      const double diff = static_cast<double>(q.mean(d, t)) - prior.means(d, c);
      kl += 0.5 * ((lvp - lvq) + (vq + diff * diff) * ivp - 1.0);
      if (grad) {
        const double g = weights.beta * inv_n;
        grad->d_mean(d, t) = static_cast<S>(g * diff * ivp);
        grad->d_log_variance(d, t) = static_cast<S>(g * 0.5 * (vq * ivp - 1.0));
        dpm(d, c) -= g * diff * ivp;
        dplv(d, c) += g * 0.5 * (1.0 - (vq + diff * diff) * ivp);
      }
    }
    terms.kl += kl;

    const auto lp = log_posterior<S>(z.col(t), prior);
    terms.ce -= lp[c];
    if (grad) {
      const double g = weights.lambda * inv_n;
      for (int k = 0; k < 2; ++k) {
        // d(-log p(c|z)) / d(log joint_k) = p(k|z) - [k == c]
        const double dl = g * (std::exp(lp[k]) - (k == c ? 1.0 : 0.0));
        for (int d = 0; d < dim; ++d) {
          const double diff = static_cast<double>(z(d, t)) - prior.means(d, k);
          const double scaled = diff * prior_inv_var(d, k);
          if (weights.ce_gradient_to_latent) grad->d_latent(d, t) -= static_cast<S>(dl * scaled);
          dpm(d, k) += dl * scaled;
          dplv(d, k) += dl * (-0.5 + 0.5 * diff * scaled);
        }
      }
    }
  }
  terms.kl *= inv_n;
  terms.ce *= inv_n;
  if (grad) {
    grad->d_prior_means = dpm.cast<S>();
    grad->d_prior_log_variances = dplv.cast<S>();
  }
  return terms;
}

template <typename S>
void check_factor(const GaussianSequence<S>& q, const LatentSequence<S>& z,
                  std::span<const std::uint8_t> labels, const MixturePrior<S>& prior, long n,
                  const std::string& name) {
  require_shape(q.mean.rows(), q.mean.cols(), prior.dim(), n, "q_" + name + " mean");
  require_shape(q.log_variance.rows(), q.log_variance.cols(), prior.dim(), n,
                "q_" + name + " log_variance");
  require_shape(z.rows(), z.cols(), prior.dim(), n, "z_" + name);
  if (static_cast<long>(labels.size()) != n) {
    throw std::invalid_argument("c_" + name + " has " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " frames");
  }
  prior.validate();
  require_finite(q.mean, "kl_" + name);
  require_finite(q.log_variance, "kl_" + name);
  require_finite(prior.means, "kl_" + name);
  require_finite(prior.log_variances, "kl_" + name);
  require_finite(z, "ce_" + name);
}

void require_finite_term(double value, const std::string& term) {
  if (!std::isfinite(value)) throw NonFiniteLoss(term, "term evaluated to " + std::to_string(value));
}

}  // namespace

template <typename S>
LossBreakdown<S> elbo_loss(const ElboInputs<S>& in, const LossWeights& weights,
                           ElboGradients<S>* grads) {
  const Matrix<S>& x = *in.target;
  const Matrix<S>& x_hat = *in.prediction;
  const long n = x.cols();
  if (n == 0) throw std::invalid_argument("elbo_loss: no frames");
  require_shape(x_hat.rows(), x_hat.cols(), x.rows(), n, "prediction");
  check_factor(*in.q_art, *in.z_art, in.c_art, *in.prior_art, n, "art");
  check_factor(*in.q_dyn, *in.z_dyn, in.c_dyn, *in.prior_dyn, n, "dyn");
  require_finite(x, "recon");
  require_finite(x_hat, "recon");

  const double recon = (x_hat.template cast<double>() - x.template cast<double>()).squaredNorm() / n;
  const auto art = factor_terms(*in.q_art, *in.z_art, in.c_art, *in.prior_art, weights,
                                grads ? &grads->art : nullptr);
  const auto dyn = factor_terms(*in.q_dyn, *in.z_dyn, in.c_dyn, *in.prior_dyn, weights,
                                grads ? &grads->dyn : nullptr);
  require_finite_term(recon, "recon");
  require_finite_term(art.kl, "kl_art");
  require_finite_term(dyn.kl, "kl_dyn");
  require_finite_term(art.ce, "ce_art");
  require_finite_term(dyn.ce, "ce_dyn");

  LossBreakdown<S> out;
  out.recon = static_cast<S>(recon);
  out.kl_art = static_cast<S>(std::max(art.kl, 0.0));
  out.kl_dyn = static_cast<S>(std::max(dyn.kl, 0.0));
  out.ce_art = static_cast<S>(std::max(art.ce, 0.0));
  out.ce_dyn = static_cast<S>(std::max(dyn.ce, 0.0));
  out.total = static_cast<S>(static_cast<double>(out.recon) +
                             weights.beta * (static_cast<double>(out.kl_art) + out.kl_dyn) +
                             weights.lambda * (static_cast<double>(out.ce_art) + out.ce_dyn));
  if (grads) grads->d_prediction = (S(2) / S(n)) * (x_hat - x);
  return out;
}

#define PIANOGM_INSTANTIATE(S)                                                                  \
  template struct MixturePrior<S>;                                                              \
  template LatentSequence<S> reparameterize(const GaussianSequence<S>&, const Matrix<S>&);      \
  template void reparameterize_backward(const GaussianSequence<S>&, const Matrix<S>&,           \
                                        const Matrix<S>&, Matrix<S>&, Matrix<S>&);              \
  template S kl_diag_gaussian(const GaussianParams<S>&, const GaussianParams<S>&);              \
  template GaussianParams<S> conditional_prior(int, const MixturePrior<S>&);                    \
  template std::array<S, 2> component_log_joint(const Eigen::Ref<const Vector<S>>&,             \
                                                const MixturePrior<S>&);                        \
  template std::array<S, 2> responsibilities(const Eigen::Ref<const Vector<S>>&,                \
                                             const MixturePrior<S>&);                           \
  template S aux_ce_loss(const LatentSequence<S>&, std::span<const std::uint8_t>,               \
                         const MixturePrior<S>&);                                               \
  template LossBreakdown<S> elbo_loss(const ElboInputs<S>&, const LossWeights&, ElboGradients<S>*);

PIANOGM_INSTANTIATE(float)
PIANOGM_INSTANTIATE(double)

}  // namespace pianogm
