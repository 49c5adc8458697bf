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

#include "pianogm/manifest.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "pianogm/npz.hpp"

namespace pianogm {

int CsvTable::column(std::initializer_list<const char*> candidates) const {
  for (const char* name : candidates) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
  }
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !record.empty()) {
          record.push_back(std::move(field));
          records.push_back(std::move(record));
        }
        field.clear();
        record.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<SourcePair> read_source_manifest(const std::filesystem::path& csv,
                                             const std::filesystem::path& root) {
  const auto table = read_csv(csv);
  const int midi = table.column({"midi_filename", "midi_path", "midi"});
  const int audio = table.column({"audio_filename", "audio_path", "audio"});
  const int split = table.column({"split"});
  if (midi < 0 || audio < 0 || split < 0) {
    throw std::runtime_error(csv.string() + ": manifest needs midi, audio and split columns");
  }
  std::vector<SourcePair> pairs;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::runtime_error(csv.string() + ": row has " + std::to_string(row.size()) +
                               " fields, header has " + std::to_string(table.header.size()));
    }
    pairs.push_back({root / row[midi], root / row[audio], row[split]});
  }
  return pairs;
}

void write_dataset_manifest(const std::filesystem::path& path,
                            const std::vector<DatasetEntry>& entries) {
  std::ostringstream out;
  out << "piece,archive,split,frames,notes,art_fraction,dyn_fraction,style\n";
  char buf[64];
  for (const auto& e : entries) {
    out << csv_escape(e.piece) << ',' << csv_escape(e.archive) << ',' << csv_escape(e.split)
        << ',' << e.frames << ',' << e.notes << ',';
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", e.art_fraction, e.dyn_fraction);
    out << buf << ',' << csv_escape(e.style) << '\n';
  }
  write_text_atomically(path, out.str());
}

std::vector<DatasetEntry> read_dataset_manifest(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const int piece = table.column({"piece"});
  const int archive = table.column({"archive"});
  const int split = table.column({"split"});
  const int frames = table.column({"frames"});
  const int notes = table.column({"notes"});
  const int art = table.column({"art_fraction"});
  const int dyn = table.column({"dyn_fraction"});
  const int style = table.column({"style"});
  if (piece < 0 || archive < 0 || split < 0) {
    throw std::runtime_error(path.string() + ": not a dataset manifest");
  }
  std::vector<DatasetEntry> entries;
  for (const auto& row : table.rows) {
    DatasetEntry e;
    e.piece = row.at(piece);
    e.archive = row.at(archive);
    e.split = row.at(split);
    if (frames >= 0) e.frames = std::stoi(row.at(frames));
    if (notes >= 0) e.notes = std::stoi(row.at(notes));
    if (art >= 0) e.art_fraction = std::stod(row.at(art));
    if (dyn >= 0) e.dyn_fraction = std::stod(row.at(dyn));
    if (style >= 0) e.style = row.at(style);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace pianogm
