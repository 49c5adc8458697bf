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
#include <string>
#include <vector>

namespace pianogm {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of the first column whose name is in `candidates`, or -1.
  int column(std::initializer_list<const char*> candidates) const;
};

/// RFC 4180 style reader (quoted fields, doubled quotes, CRLF tolerant).
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);
std::string csv_escape(const std::string& field);

/// One aligned MIDI/audio pair of a MAESTRO-style manifest.
struct SourcePair {
  std::filesystem::path midi;
  std::filesystem::path audio;
  std::string split;
};

/// Accepts `midi_filename`/`midi_path`/`midi`, `audio_filename`/`audio_path`/
/// `audio` and `split` columns; relative paths resolve against `root`.
std::vector<SourcePair> read_source_manifest(const std::filesystem::path& csv,
                                             const std::filesystem::path& root);

/// One prepared piece archive.
struct DatasetEntry {
  std::string piece;
  std::string archive;  // relative to the dataset directory
  std::string split;
  int frames = 0;
  int notes = 0;
  double art_fraction = 0.0;
  double dyn_fraction = 0.0;
  std::string style;  // synthetic corpus cell, empty for real data
};

inline constexpr const char* kDatasetManifestName = "manifest.csv";

void write_dataset_manifest(const std::filesystem::path& path,
                            const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> read_dataset_manifest(const std::filesystem::path& path);

}  // namespace pianogm
