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

#include "pianogm/vocoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace pianogm {

Eigen::MatrixXd mel_to_magnitude(const MelSpectrogram& mel, const FrameGrid& grid) {
  if (mel.bins() != grid.n_mels) throw std::invalid_argument("mel_to_magnitude: bin count mismatch");
  if (!mel.data.allFinite()) throw std::invalid_argument("mel_to_magnitude: non-finite input");
  const Eigen::MatrixXd bank = mel_filterbank(grid);  // n_mels x bins
  // Minimum-norm ridge inverse F^T (F F^T + r I)^-1 with r relative to the
  // mean diagonal of F F^T.
  Eigen::MatrixXd gram = bank * bank.transpose();
  const double ridge = 1e-3 * gram.diagonal().mean();
  gram.diagonal().array() += ridge;
  // Stored spectrograms are float, so the floor is compared at float precision.
  const auto floor = static_cast<float>(std::log(kMelPowerFloor));
  const Eigen::MatrixXd mel_power =
      (mel.data.array() <= floor)
          .select(0.0, (mel.data.cast<double>().array().exp() - kMelPowerFloor).max(0.0))
          .matrix()
          .transpose();
  const Eigen::MatrixXd power = bank.transpose() * gram.ldlt().solve(mel_power);
  return power.array().max(0.0).sqrt().matrix();
}

double spectral_convergence(std::span<const double> padded_signal, const Eigen::MatrixXd& magnitude,
                            const Stft& stft) {
  const Eigen::MatrixXd estimate = stft.analyze_padded(padded_signal).cwiseAbs();
  const double norm = magnitude.norm();
  if (norm == 0.0) return estimate.norm();
  return (estimate - magnitude).norm() / norm;
}

std::vector<double> griffin_lim(const Eigen::MatrixXd& magnitude, const Stft& stft, int n_iterations) {
  if (n_iterations < 1) throw std::invalid_argument("griffin_lim: need at least one iteration");
  const auto frames = static_cast<int>(magnitude.cols());
  const std::size_t length = stft.padded_length(frames);
  ComplexSpectrogram spec = magnitude.cast<std::complex<double>>();
  std::vector<double> signal = stft.overlap_add(spec, length);
  for (int i = 0; i < n_iterations; ++i) {
    const ComplexSpectrogram estimate = stft.analyze_padded(signal);
    for (Eigen::Index t = 0; t < spec.cols(); ++t) {
      for (Eigen::Index k = 0; k < spec.rows(); ++k) {
        const double a = std::abs(estimate(k, t));
        spec(k, t) = a > 0.0 ? estimate(k, t) * (magnitude(k, t) / a) : std::complex<double>(magnitude(k, t));
      }
    }
    signal = stft.overlap_add(spec, length);
  }
  return signal;
}

std::vector<float> mel_to_audio(const MelSpectrogram& mel, const FrameGrid& grid, int n_iterations) {
  if (n_iterations < 1) throw std::invalid_argument("mel_to_audio: need at least one iteration");
  if (mel.frames() == 0) return {};
  const Stft stft(grid);
  const std::vector<double> padded = griffin_lim(mel_to_magnitude(mel, grid), stft, n_iterations);
  const std::size_t n = static_cast<std::size_t>(mel.frames()) * grid.hop_length;
  std::vector<float> out(n, 0.0f);
  for (std::size_t i = 0; i < n && stft.pad() + i < padded.size(); ++i) {
    out[i] = static_cast<float>(padded[stft.pad() + i]);
  }
  return out;
}

}  // namespace pianogm
