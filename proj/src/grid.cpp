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

#include "pianogm/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pianogm {

double log_floor() { return std::log(kMelPowerFloor); }

void FrameGrid::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid frame grid: " + what);
  };
  if (sample_rate <= 0) fail("sample_rate must be positive");
  if (hop_length <= 0) fail("hop_length must be positive");
  if (window_length <= 0) fail("window_length must be positive");
  if (hop_length > window_length) fail("hop_length exceeds window_length");
  if (n_mels != kNumMels) fail("n_mels must be 80");
  if (!(mel_fmin >= 0.0 && mel_fmin < mel_fmax)) fail("mel_fmin must be below mel_fmax");
  if (mel_fmax > sample_rate / 2.0) fail("mel_fmax exceeds Nyquist");
}

int FrameGrid::frames_for_duration(double duration_s) const {
  // Guard against 1000.0000000001 style round-off before ceil.
  const double frames = duration_s * frames_per_second();
  const double nearest = std::round(frames);
  if (std::abs(frames - nearest) < 1e-9) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(frames));
}

std::string FrameGrid::to_json() const {
  nlohmann::ordered_json j;
  j["sample_rate"] = sample_rate;
  j["hop_length"] = hop_length;
  j["window_length"] = window_length;
  j["n_mels"] = n_mels;
  j["mel_fmin"] = mel_fmin;
  j["mel_fmax"] = mel_fmax;
  j["frames_per_second"] = frames_per_second();
  return j.dump(2);
}

FrameGrid FrameGrid::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FrameGrid grid;
  grid.sample_rate = j.at("sample_rate").get<int>();
  grid.hop_length = j.at("hop_length").get<int>();
  grid.window_length = j.at("window_length").get<int>();
  grid.n_mels = j.at("n_mels").get<int>();
  grid.mel_fmin = j.at("mel_fmin").get<double>();
  grid.mel_fmax = j.at("mel_fmax").get<double>();
  grid.validate();
  return grid;
}

std::string describe(const NoteEvent& note) {
  std::ostringstream out;
  out << "NoteEvent(pitch=" << note.pitch << ", onset=" << note.onset
      << ", offset=" << note.offset << ", velocity=" << note.velocity << ")";
  return out.str();
}

}  // namespace pianogm
