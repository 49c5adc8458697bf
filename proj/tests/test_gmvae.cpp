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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pianogm/gmvae.hpp"

namespace pianogm {
namespace {

using Md = Matrix<double>;
using Vd = Vector<double>;

GaussianSequence<double> random_q(int d, int t, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 0.7);
  GaussianSequence<double> q;
  q.mean = Md::NullaryExpr(d, t, [&] { return n(rng); });
  q.log_variance = Md::NullaryExpr(d, t, [&] { return n(rng); });
  return q;
}

TEST(Reparameterize, ZeroNoiseAndUnitVariance) {
  std::mt19937_64 rng(1);
  auto q = random_q(3, 4, rng);
  EXPECT_EQ(reparameterize(q, Md(Md::Zero(3, 4))), q.mean);
  q.log_variance.setZero();
  const Md noise = Md::Random(3, 4);
  EXPECT_TRUE(reparameterize(q, noise).isApprox(q.mean + noise, 1e-15));
  EXPECT_THROW(reparameterize(q, Md(Md::Zero(3, 5))), std::invalid_argument);
}

TEST(Reparameterize, MonteCarloMomentsWithinThreeStandardErrors) {
  GaussianSequence<double> q;
  q.mean = Md(2, 1);
  q.mean << 0.3, -1.2;
  q.log_variance = Md(2, 1);
  q.log_variance << 0.5, -0.8;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  const int draws = 100000;
  Md noise(2, draws);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = n(rng);
  GaussianSequence<double> tiled{q.mean.replicate(1, draws), q.log_variance.replicate(1, draws)};
  const Md z = reparameterize(tiled, noise);
  for (int d = 0; d < 2; ++d) {
    const double var = std::exp(q.log_variance(d, 0));
    const double mean = z.row(d).mean();
    const double sample_var = (z.row(d).array() - mean).square().sum() / (draws - 1);
    EXPECT_NEAR(mean, q.mean(d, 0), 3 * std::sqrt(var / draws));
    EXPECT_NEAR(sample_var, var, 3 * var * std::sqrt(2.0 / (draws - 1)));
  }
}

TEST(Kl, ZeroForIdenticalAndHalfForUnitShift) {
  GaussianParams<double> q{Vd::Constant(3, 0.2), Vd::Constant(3, -0.4)};
  EXPECT_EQ(kl_diag_gaussian(q, q), 0.0);
  GaussianParams<double> a{Vd::Zero(1), Vd::Zero(1)};
  GaussianParams<double> b{Vd::Ones(1), Vd::Zero(1)};
  EXPECT_NEAR(kl_diag_gaussian(a, b), 0.5, 1e-15);
}

TEST(Kl, NonNegativeAndMatchesMonteCarlo) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 1 + trial % 4;
    Vd mq = Vd::NullaryExpr(d, [&] { return u(rng); }), mp = Vd::NullaryExpr(d, [&] { return u(rng); });
    Vd lq = Vd::NullaryExpr(d, [&] { return 0.5 * u(rng); }), lp = Vd::NullaryExpr(d, [&] { return 0.5 * u(rng); });
    const double closed = kl_diag_gaussian<double>({mq, lq}, {mp, lp});
    EXPECT_GT(closed, 0.0);
    EXPECT_NEAR(oracle::monte_carlo_kl(mq, lq, mp, lp, 100000, rng), closed, 1e-2);
  }
}

TEST(ConditionalPrior, SelectsComponentByLabel) {
  auto prior = MixturePrior<double>::symmetric(2);
  prior.log_variances(1, 1) = 0.3;
  for (int c : {0, 1, 0}) {
    const auto p = conditional_prior(c, prior);
    EXPECT_EQ(p.mean, prior.means.col(c));
    EXPECT_EQ(p.log_variance, prior.log_variances.col(c));
  }
  EXPECT_THROW(conditional_prior(2, prior), std::invalid_argument);
}

TEST(Responsibilities, SymmetryFarMeansAndNormalisation) {
  const auto sym = MixturePrior<double>::symmetric(4);
  const auto r = responsibilities<double>(Vd::Zero(4), sym);
  EXPECT_DOUBLE_EQ(r[0], 0.5);
  EXPECT_DOUBLE_EQ(r[1], 0.5);

  MixturePrior<double> far = MixturePrior<double>::symmetric(1);
  far.means << -5, 5;
  const auto r0 = responsibilities<double>(far.means.col(0), far);
  EXPECT_GT(r0[0], 0.999);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 30);
  for (int k = 0; k < 100; ++k) {
    const Vd z = Vd::NullaryExpr(4, [&] { return n(rng); });
    const auto p = responsibilities<double>(z, sym);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
    EXPECT_GE(p[0], 0.0);
    EXPECT_GE(p[1], 0.0);
  }
  // Extreme inputs stay finite through log-sum-exp.
  const auto e = responsibilities<double>(Vd::Constant(4, 1e4), sym);
  EXPECT_TRUE(std::isfinite(e[0]) && std::isfinite(e[1]));
  EXPECT_NEAR(e[1], 1.0, 1e-12);
}

TEST(Responsibilities, InvariantToCommonLogDensityShift) {
  // Scaling both variances by the same factor at z equidistant in Mahalanobis
  // terms shifts both log-densities equally.
  auto prior = MixturePrior<double>::symmetric(3);
  const Vd z = Vd::Constant(3, 0.25);
  const auto a = responsibilities<double>(z, prior);
  const auto lj = component_log_joint<double>(z, prior);
  const double shift = 1234.5;
  const double m = std::max(lj[0] + shift, lj[1] + shift);
  const double p0 = std::exp(lj[0] + shift - m) / (std::exp(lj[0] + shift - m) + std::exp(lj[1] + shift - m));
  EXPECT_NEAR(a[0], p0, 1e-15);
}

TEST(AuxCe, Examples) {
  MixturePrior<double> far = MixturePrior<double>::symmetric(2);
  far.means.col(0).setConstant(-10);
  far.means.col(1).setConstant(10);
  Md z(2, 3);
  z << -10, 10, -10, -10, 10, -10;
  const std::vector<std::uint8_t> labels{0, 1, 0};
  EXPECT_NEAR(aux_ce_loss(z, labels, far), 0.0, 1e-12);
  EXPECT_NEAR(aux_ce_loss<double>(Md::Zero(2, 3), labels, MixturePrior<double>::symmetric(2)), std::log(2.0), 1e-15);
  std::mt19937_64 rng(5);
  EXPECT_GE(aux_ce_loss(Md(Md::Random(2, 3) * 5), labels, far), 0.0);
}

struct ElboFixture {
  int d = 3, t = 5;
  Md x, x_hat, noise_art, noise_dyn;
  GaussianSequence<double> q_art, q_dyn;
  std::vector<std::uint8_t> c_art{0, 1, 1, 0, 1}, c_dyn{1, 1, 0, 0, 0};
  MixturePrior<double> prior_art = MixturePrior<double>::symmetric(3), prior_dyn = MixturePrior<double>::symmetric(3);

  explicit ElboFixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    x = Md::NullaryExpr(80, t, [&] { return n(rng); });
    x_hat = Md::NullaryExpr(80, t, [&] { return n(rng); });
    q_art = random_q(d, t, rng);
    q_dyn = random_q(d, t, rng);
    noise_art = Md::NullaryExpr(d, t, [&] { return n(rng); });
    noise_dyn = Md::NullaryExpr(d, t, [&] { return n(rng); });
    prior_art.means(0, 1) = 0.7;
    prior_dyn.log_variances(2, 0) = -0.3;
  }

  LossBreakdown<double> loss(const LossWeights& w, ElboGradients<double>* g = nullptr) const {
    const Md z_art = reparameterize(q_art, noise_art);
    const Md z_dyn = reparameterize(q_dyn, noise_dyn);
    ElboInputs<double> in{&x, &x_hat, &q_art, &q_dyn, &z_art, &z_dyn, c_art, c_dyn, &prior_art, &prior_dyn};
    return elbo_loss(in, w, g);
  }
};

TEST(Elbo, PerfectReconstructionAndPriorMatchGiveZero) {
  ElboFixture f(6);
  f.x_hat = f.x;
  for (int t = 0; t < f.t; ++t) {
    f.q_art.mean.col(t) = f.prior_art.means.col(f.c_art[t]);
    f.q_art.log_variance.col(t) = f.prior_art.log_variances.col(f.c_art[t]);
    f.q_dyn.mean.col(t) = f.prior_dyn.means.col(f.c_dyn[t]);
    f.q_dyn.log_variance.col(t) = f.prior_dyn.log_variances.col(f.c_dyn[t]);
  }
  const auto l = f.loss({});
  EXPECT_EQ(l.recon, 0.0);
  EXPECT_NEAR(l.kl_art, 0.0, 1e-15);
  EXPECT_NEAR(l.kl_dyn, 0.0, 1e-15);
}

TEST(Elbo, FieldsMatchIndependentRecomputationAndTotalDecomposes) {
  ElboFixture f(7);
  LossWeights w;
  w.beta = 0.37;
  w.lambda = 1.9;
  const auto l = f.loss(w);
  const double recon = (f.x_hat - f.x).squaredNorm() / f.t;
  double kl_art = 0, kl_dyn = 0;
  for (int t = 0; t < f.t; ++t) {
    kl_art += kl_diag_gaussian(f.q_art.frame(t), conditional_prior(f.c_art[t], f.prior_art));
    kl_dyn += kl_diag_gaussian(f.q_dyn.frame(t), conditional_prior(f.c_dyn[t], f.prior_dyn));
  }
  EXPECT_NEAR(l.recon, recon, 1e-12);
  EXPECT_NEAR(l.kl_art, kl_art / f.t, 1e-12);
  EXPECT_NEAR(l.kl_dyn, kl_dyn / f.t, 1e-12);
  EXPECT_NEAR(l.ce_art, aux_ce_loss(reparameterize(f.q_art, f.noise_art), f.c_art, f.prior_art), 1e-12);
  EXPECT_EQ(l.total, l.recon + w.beta * (l.kl_art + l.kl_dyn) + w.lambda * (l.ce_art + l.ce_dyn));
  EXPECT_GE(l.kl_art, 0.0);
  EXPECT_GE(l.ce_dyn, 0.0);
}

TEST(Elbo, PermutingFramesLeavesEveryFieldUnchanged) {
  ElboFixture f(8);
  const auto before = f.loss({});
  std::vector<int> perm{3, 0, 4, 1, 2};
  ElboFixture g = f;
  for (int t = 0; t < f.t; ++t) {
    const int s = perm[t];
    g.x.col(t) = f.x.col(s);
    g.x_hat.col(t) = f.x_hat.col(s);
    g.q_art.mean.col(t) = f.q_art.mean.col(s);
    g.q_art.log_variance.col(t) = f.q_art.log_variance.col(s);
    g.q_dyn.mean.col(t) = f.q_dyn.mean.col(s);
    g.q_dyn.log_variance.col(t) = f.q_dyn.log_variance.col(s);
    g.noise_art.col(t) = f.noise_art.col(s);
    g.noise_dyn.col(t) = f.noise_dyn.col(s);
    g.c_art[t] = f.c_art[s];
    g.c_dyn[t] = f.c_dyn[s];
  }
  const auto after = g.loss({});
  EXPECT_NEAR(after.recon, before.recon, 1e-12);
  EXPECT_NEAR(after.kl_art, before.kl_art, 1e-12);
  EXPECT_NEAR(after.kl_dyn, before.kl_dyn, 1e-12);
  EXPECT_NEAR(after.ce_art, before.ce_art, 1e-12);
  EXPECT_NEAR(after.ce_dyn, before.ce_dyn, 1e-12);
}

TEST(Elbo, NonFiniteInputNamesTheTerm) {
  ElboFixture f(9);
  f.x_hat(3, 2) = std::nan("");
  try {
    f.loss({});
    FAIL();
  } catch (const NonFiniteLoss& e) {
    EXPECT_EQ(e.term(), "recon");
  }
  ElboFixture g(9);
  g.q_dyn.log_variance(0, 0) = std::numeric_limits<double>::infinity();
  try {
    g.loss({});
    FAIL();
  } catch (const NonFiniteLoss& e) {
    EXPECT_EQ(e.term(), "kl_dyn");
  }
}

TEST(Elbo, RejectsBadLabelsAndShapes) {
  ElboFixture f(10);
  f.c_art[2] = 2;
  EXPECT_THROW(f.loss({}), std::invalid_argument);
  ElboFixture g(10);
  g.c_dyn.pop_back();
  EXPECT_THROW(g.loss({}), std::invalid_argument);
}

// Chains the analytic gradients through the reparameterisation and compares
// with finite differences of the scalar total.
TEST(Elbo, GradientsMatchFiniteDifferences) {
  for (bool ce_to_latent : {true, false}) {
    ElboFixture f(11);
    LossWeights w;
    w.beta = 0.6;
    w.lambda = 1.3;
    w.ce_gradient_to_latent = ce_to_latent;
    ElboGradients<double> g;
    f.loss(w, &g);

    auto chained = [&](const GaussianSequence<double>& q, const Md& noise, const FactorGradients<double>& fg) {
      Md dm = fg.d_mean, dl = fg.d_log_variance;
      reparameterize_backward(q, noise, fg.d_latent, dm, dl);
      return std::pair{dm, dl};
    };
    const auto [dm_art, dl_art] = chained(f.q_art, f.noise_art, g.art);
    const auto [dm_dyn, dl_dyn] = chained(f.q_dyn, f.noise_dyn, g.dyn);

    auto total = [&] { return f.loss(w).total; };
    auto check = [&](Md& param, const Md& analytic, const char* what) {
      for (Eigen::Index i = 0; i < param.size(); ++i) {
        const double num = oracle::five_point(total, param.data()[i], 1e-4);
        ASSERT_LT(oracle::relative_error(analytic.data()[i], num), 1e-6)
            << what << "[" << i << "] analytic " << analytic.data()[i] << " numeric " << num;
      }
    };
    if (!ce_to_latent) {
      // Without the latent path the CE term still moves through z, so only
      // the reconstruction and prior gradients are compared.
      check(f.x_hat, g.d_prediction, "prediction");
      check(f.prior_art.means, g.art.d_prior_means, "prior_art.means");
      check(f.prior_dyn.log_variances, g.dyn.d_prior_log_variances, "prior_dyn.log_variances");
      continue;
    }
    check(f.x_hat, g.d_prediction, "prediction");
    check(f.q_art.mean, dm_art, "q_art.mean");
    check(f.q_art.log_variance, dl_art, "q_art.log_variance");
    check(f.q_dyn.mean, dm_dyn, "q_dyn.mean");
    check(f.q_dyn.log_variance, dl_dyn, "q_dyn.log_variance");
    check(f.prior_art.means, g.art.d_prior_means, "prior_art.means");
    check(f.prior_art.log_variances, g.art.d_prior_log_variances, "prior_art.log_variances");
    check(f.prior_dyn.means, g.dyn.d_prior_means, "prior_dyn.means");
    check(f.prior_dyn.log_variances, g.dyn.d_prior_log_variances, "prior_dyn.log_variances");
  }
}

TEST(Elbo, StoppedCeGradientLeavesLatentGradientZero) {
  ElboFixture f(12);
  LossWeights w;
  w.ce_gradient_to_latent = false;
  ElboGradients<double> g;
  f.loss(w, &g);
  EXPECT_EQ(g.art.d_latent.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(g.art.d_prior_means.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MixturePrior, SymmetricInitialisation) {
  const auto p = MixturePrior<float>::symmetric(5);
  EXPECT_TRUE((p.means.col(0).array() == -1.0f).all());
  EXPECT_TRUE((p.means.col(1).array() == 1.0f).all());
  EXPECT_TRUE((p.log_variances.array() == 0.0f).all());
  EXPECT_EQ(p.weights[0], 0.5f);
  EXPECT_NO_THROW(p.validate());
  auto bad = p;
  bad.weights = {0.3f, 0.3f};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace pianogm
