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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pianogm/grid.hpp"

namespace pianogm {

/// Malformed Standard MIDI File; carries the byte offset where decoding failed.
class MidiParseError : public std::runtime_error {
 public:
  MidiParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct MidiParseResult {
  std::vector<NoteEvent> notes;  // sorted by onset, then pitch
  std::vector<std::string> warnings;
  // Set when at least one note-on had no matching note-off and was closed at
  // the end of its track.
  bool closed_at_track_end = false;
};

/// Decodes note events from SMF type 0 or 1 bytes. Note-on/note-off pairs are
/// matched per (track, channel, pitch) first-on/first-off; sustain pedal and
/// all other controllers are ignored.
MidiParseResult parse_midi(std::span<const std::uint8_t> bytes);

MidiParseResult read_midi_file(const std::filesystem::path& path);

}  // namespace pianogm
