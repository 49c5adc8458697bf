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

#include "pianogm/grid.hpp"

namespace pianogm {

/// Default level separating sounding frames from silence in log-Mel units.
double default_sounding_threshold();

/// Mean over onset events of the number of frames, from the onset frame up to
/// the next onset frame (or the end), whose loudest bin is at or above
/// `threshold`. Frames with several onsets count once. Returns 0 when the roll
/// has no onsets.
double mean_note_sustain(const MelSpectrogram& mel, const OnsetRoll& onset,
                         double threshold = default_sounding_threshold());

/// Mean over frames of the summed Mel power exp(mel).
double mean_frame_energy(const MelSpectrogram& mel);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace pianogm
