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

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pianogm/grid.hpp"

namespace pianogm::oracle {

/// Monte Carlo KL(q || p) for diagonal Gaussians: mean of log q(z) - log p(z)
/// over z ~ q, with antithetic pairs (z, 2 mu_q - z). `draws` counts single
/// samples.
inline double monte_carlo_kl(const Eigen::VectorXd& mq, const Eigen::VectorXd& lvq, const Eigen::VectorXd& mp,
                             const Eigen::VectorXd& lvp, int draws, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  auto log_density = [](const Eigen::VectorXd& z, const Eigen::VectorXd& m, const Eigen::VectorXd& lv) {
    double s = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double d = z[i] - m[i];
      s += -0.5 * (std::log(2 * std::numbers::pi) + lv[i] + d * d / std::exp(lv[i]));
    }
    return s;
  };
  const Eigen::VectorXd sd = (0.5 * lvq.array()).exp();
  double total = 0;
  Eigen::VectorXd eps(mq.size());
  for (int k = 0; k < draws / 2; ++k) {
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = normal(rng);
    for (int sign : {1, -1}) {
      const Eigen::VectorXd z = mq + sign * sd.cwiseProduct(eps);
      total += log_density(z, mq, lvq) - log_density(z, mp, lvp);
    }
  }
  return total / (2 * (draws / 2));
}

/// Articulation labels by scanning note intervals directly: frame t is on iff
/// some note covers [t/fps, (t+1)/fps) under the floor/one-frame-minimum rule.
inline std::vector<std::uint8_t> scan_articulation(const std::vector<NoteEvent>& notes, double fps, int frames) {
  std::vector<std::uint8_t> out(frames, 0);
  for (int t = 0; t < frames; ++t) {
    for (const auto& n : notes) {
      const int first = static_cast<int>(std::floor(n.onset * fps + 1e-9));
      const int last = std::max(first + 1, static_cast<int>(std::floor(n.offset * fps + 1e-9)));
      if (t >= first && t < last) {
        out[t] = 1;
        break;
      }
    }
  }
  return out;
}

/// Dynamics labels by scanning: mean velocity over covering notes > 70, using
/// exact rational comparison.
inline std::vector<std::uint8_t> scan_dynamics(const std::vector<NoteEvent>& notes, double fps, int frames) {
  std::vector<std::uint8_t> out(frames, 0);
  for (int t = 0; t < frames; ++t) {
    int count = 0, sum = 0;
    for (const auto& n : notes) {
      const int first = static_cast<int>(std::floor(n.onset * fps + 1e-9));
      const int last = std::max(first + 1, static_cast<int>(std::floor(n.offset * fps + 1e-9)));
      if (t >= first && t < last) {
        ++count;
        sum += n.velocity;
      }
    }
    out[t] = count > 0 && sum > 70 * count;
  }
  return out;
}

/// Relative error with a floor on the denominator; parameters whose analytic
/// and numerical gradients are both below the floor count as agreeing.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Fourth-order central difference of f at x along one coordinate.
template <typename F>
double five_point(F&& f, double& x, double h) {
  const double x0 = x;
  x = x0 + 2 * h;
  const double f2 = f();
  x = x0 + h;
  const double f1 = f();
  x = x0 - h;
  const double fm1 = f();
  x = x0 - 2 * h;
  const double fm2 = f();
  x = x0;
  return (-f2 + 8 * f1 - 8 * fm1 + fm2) / (12 * h);
}

}  // namespace pianogm::oracle
