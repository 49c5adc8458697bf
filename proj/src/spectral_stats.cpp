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

#include "pianogm/spectral_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pianogm {

double default_sounding_threshold() { return log_floor() + 2.0; }

double mean_note_sustain(const MelSpectrogram& mel, const OnsetRoll& onset, double threshold) {
  if (mel.frames() != onset.frames()) throw std::invalid_argument("mean_note_sustain: length mismatch");
  std::vector<int> onsets;
  for (int t = 0; t < onset.frames(); ++t) {
    if (onset.data.row(t).maxCoeff() > 0) onsets.push_back(t);
  }
  if (onsets.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    const int end = i + 1 < onsets.size() ? onsets[i + 1] : mel.frames();
    int held = 0;
    for (int t = onsets[i]; t < end; ++t) held += mel.data.row(t).maxCoeff() >= threshold;
    total += held;
  }
  return total / static_cast<double>(onsets.size());
}

double mean_frame_energy(const MelSpectrogram& mel) {
  if (mel.frames() == 0) return 0.0;
  return mel.data.cast<double>().array().exp().sum() / mel.frames();
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace pianogm
