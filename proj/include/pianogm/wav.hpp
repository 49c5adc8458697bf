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

#include <filesystem>
#include <span>
#include <vector>

namespace pianogm {

struct WavAudio {
  int sample_rate = 0;
  std::vector<float> samples;  // mono, nominal range [-1, 1]
};

/// Reads 16-bit PCM or 32-bit float RIFF/WAVE; multichannel input is
/// downmixed by averaging channels.
WavAudio read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1].
void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> samples,
                     int sample_rate);

}  // namespace pianogm
