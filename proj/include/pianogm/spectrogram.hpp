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

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "pianogm/grid.hpp"

namespace pianogm {

using ComplexSpectrogram = Eigen::MatrixXcd;  // bins x frames

/// Short-time Fourier transform with a periodic Hann window, FFT size equal to
/// the window length and spectra scaled by 1/sum(window), so a full-scale
/// sinusoid of amplitude a peaks at a/2.
///
/// Signals are center-padded with window/2 zeros on each side, giving
/// 1 + floor(len / hop) frames; frame t is centred on sample t * hop.
class Stft {
 public:
  explicit Stft(const FrameGrid& grid);

  int bins() const { return window_length_ / 2 + 1; }
  int hop() const { return hop_; }
  int window_length() const { return window_length_; }
  int pad() const { return window_length_ / 2; }
  int frames_for(std::size_t samples) const;

  ComplexSpectrogram analyze(std::span<const float> signal) const;
  /// Analysis of an already padded signal (no extra padding applied).
  ComplexSpectrogram analyze_padded(std::span<const double> padded) const;
  /// Least-squares overlap-add inverse onto a padded signal of padded_length.
  std::vector<double> overlap_add(const ComplexSpectrogram& spec, std::size_t padded_length) const;
  std::size_t padded_length(int frames) const;

  const Eigen::VectorXd& window() const { return window_; }

 private:
  int window_length_;
  int hop_;
  Eigen::VectorXd window_;
  double window_sum_;
  mutable Eigen::FFT<double> fft_;
};

/// Triangular HTK-Mel filterbank, n_mels x (window/2 + 1), unit peak height.
Eigen::MatrixXd mel_filterbank(const FrameGrid& grid);

double hz_to_mel(double hz);
double mel_to_hz(double mel);
/// Centre frequency in Hz of each Mel band.
std::vector<double> mel_band_centers(const FrameGrid& grid);

/// Log-Mel power spectrogram: |STFT|^2 -> Mel filterbank -> log(max(p, 1e-5)).
/// Throws std::invalid_argument on empty audio or sample-rate mismatch.
MelSpectrogram mel_spectrogram(std::span<const float> samples, int sample_rate,
                               const FrameGrid& grid);

/// Trims trailing frames, or pads with log-floor frames, to exactly `frames`.
MelSpectrogram fit_frames(const MelSpectrogram& mel, int frames);

}  // namespace pianogm
