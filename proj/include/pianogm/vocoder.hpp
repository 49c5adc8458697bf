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

#include <span>
#include <vector>

#include <Eigen/Core>

#include "pianogm/grid.hpp"
#include "pianogm/spectrogram.hpp"

namespace pianogm {

inline constexpr int kDefaultGriffinLimIterations = 64;

/// Linear STFT magnitudes (bins x T) recovered from a log-Mel spectrogram via
/// a ridge-regularised filterbank pseudo-inverse; negative power is clamped
/// to zero. Log-floor frames map to exactly zero.
Eigen::MatrixXd mel_to_magnitude(const MelSpectrogram& mel, const FrameGrid& grid);

/// Griffin-Lim phase reconstruction starting from zero phase, with
/// n_iterations magnitude projections. Returns
/// T * hop samples at grid.sample_rate.
std::vector<float> mel_to_audio(const MelSpectrogram& mel, const FrameGrid& grid,
                                int n_iterations = kDefaultGriffinLimIterations);

/// Phase reconstruction from a known magnitude; `magnitude` is bins x T on
/// the padded frame grid of Stft. Returns the padded signal.
std::vector<double> griffin_lim(const Eigen::MatrixXd& magnitude, const Stft& stft, int n_iterations);

/// || |STFT(x)| - M ||_F / ||M||_F for a padded signal x.
double spectral_convergence(std::span<const double> padded_signal, const Eigen::MatrixXd& magnitude,
                            const Stft& stft);

}  // namespace pianogm
