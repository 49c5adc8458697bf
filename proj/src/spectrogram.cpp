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

#include "pianogm/spectrogram.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pianogm {

Stft::Stft(const FrameGrid& grid)
    : window_length_(grid.window_length), hop_(grid.hop_length), window_(grid.window_length) {
  for (int n = 0; n < window_length_; ++n) {
    window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / window_length_);
  }
  window_sum_ = window_.sum();
}

int Stft::frames_for(std::size_t samples) const {
  return 1 + static_cast<int>(samples / hop_);
}

std::size_t Stft::padded_length(int frames) const {
  return static_cast<std::size_t>(frames - 1) * hop_ + window_length_;
}

ComplexSpectrogram Stft::analyze(std::span<const float> signal) const {
  const int frames = frames_for(signal.size());
  std::vector<double> padded(padded_length(frames), 0.0);
  std::copy(signal.begin(), signal.end(), padded.begin() + pad());
  return analyze_padded(padded);
}

ComplexSpectrogram Stft::analyze_padded(std::span<const double> padded) const {
  if (padded.size() < static_cast<std::size_t>(window_length_)) {
    throw std::invalid_argument("signal shorter than one analysis window");
  }
  const int frames = 1 + static_cast<int>((padded.size() - window_length_) / hop_);
  ComplexSpectrogram spec(bins(), frames);
  std::vector<double> frame(window_length_);
  std::vector<std::complex<double>> out;
  for (int t = 0; t < frames; ++t) {
    const double* src = padded.data() + static_cast<std::size_t>(t) * hop_;
    for (int n = 0; n < window_length_; ++n) frame[n] = src[n] * window_[n];
    fft_.fwd(out, frame);
    for (int k = 0; k < bins(); ++k) spec(k, t) = out[k] / window_sum_;
  }
  return spec;
}

std::vector<double> Stft::overlap_add(const ComplexSpectrogram& spec,
                                      std::size_t padded_length) const {
  std::vector<double> signal(padded_length, 0.0);
  std::vector<double> norm(padded_length, 0.0);
  std::vector<std::complex<double>> full(window_length_);
  std::vector<double> frame;
  for (int t = 0; t < spec.cols(); ++t) {
    for (int k = 0; k < bins(); ++k) full[k] = spec(k, t) * window_sum_;
    for (int k = bins(); k < window_length_; ++k) full[k] = std::conj(full[window_length_ - k]);
    fft_.inv(frame, full);
    const std::size_t start = static_cast<std::size_t>(t) * hop_;
    for (int n = 0; n < window_length_ && start + n < padded_length; ++n) {
      signal[start + n] += frame[n] * window_[n];
      norm[start + n] += window_[n] * window_[n];
    }
  }
  for (std::size_t i = 0; i < padded_length; ++i) {
    signal[i] = norm[i] > 1e-10 ? signal[i] / norm[i] : 0.0;
  }
  return signal;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(const FrameGrid& grid) {
  const double lo = hz_to_mel(grid.mel_fmin);
  const double hi = hz_to_mel(grid.mel_fmax);
  std::vector<double> edges(grid.n_mels + 2);
  for (int i = 0; i < grid.n_mels + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (grid.n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_band_centers(const FrameGrid& grid) {
  const auto edges = mel_edges(grid);
  return {edges.begin() + 1, edges.end() - 1};
}

Eigen::MatrixXd mel_filterbank(const FrameGrid& grid) {
  grid.validate();
  const int bins = grid.window_length / 2 + 1;
  const auto edges = mel_edges(grid);
  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(grid.n_mels, bins);
  for (int m = 0; m < grid.n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * grid.sample_rate / grid.window_length;
      const double rise = (f - left) / (centre - left);
      const double fall = (right - f) / (right - centre);
      bank(m, k) = std::max(0.0, std::min(rise, fall));
    }
  }
  return bank;
}

MelSpectrogram mel_spectrogram(std::span<const float> samples, int sample_rate,
                               const FrameGrid& grid) {
  grid.validate();
  if (samples.empty()) throw std::invalid_argument("mel_spectrogram: empty audio");
  if (sample_rate != grid.sample_rate) {
    throw std::invalid_argument("mel_spectrogram: audio is " + std::to_string(sample_rate) +
                                " Hz but the grid expects " +
                                std::to_string(grid.sample_rate) + " Hz; resample externally");
  }
  const Stft stft(grid);
  const ComplexSpectrogram spec = stft.analyze(samples);
  const Eigen::MatrixXd power = spec.cwiseAbs2();
  const Eigen::MatrixXd mel_power = mel_filterbank(grid) * power;  // n_mels x T
  MelSpectrogram mel;
  mel.data = mel_power.transpose()
                 .array()
                 .max(kMelPowerFloor)
                 .log()
                 .cast<float>()
                 .matrix();
  return mel;
}

MelSpectrogram fit_frames(const MelSpectrogram& mel, int frames) {
  MelSpectrogram out;
  out.data = FloatMatrix::Constant(frames, mel.bins(), static_cast<float>(log_floor()));
  const int keep = std::min(frames, mel.frames());
  out.data.topRows(keep) = mel.data.topRows(keep);
  return out;
}

}  // namespace pianogm
