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

#include "pianogm/dataset.hpp"

#include <cstdio>
#include <stdexcept>

#include "pianogm/midi.hpp"
#include "pianogm/piece_archive.hpp"
#include "pianogm/toy_corpus.hpp"
#include "pianogm/wav.hpp"

namespace pianogm {
namespace {

double fraction_on(const LabelSequence& labels) {
  if (labels.empty()) return 0.0;
  long on = 0;
  for (auto v : labels) on += v;
  return static_cast<double>(on) / labels.size();
}

std::string index_name(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, i);
  return buf;
}

}  // namespace

std::string summarize(const DatasetEntry& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s T=%d notes=%d art=%.1f%% dyn=%.1f%%", e.piece.c_str(), e.frames, e.notes,
                100.0 * e.art_fraction, 100.0 * e.dyn_fraction);
  std::string out = buf;
  if (!e.style.empty()) out += " [" + e.style + "]";
  return out;
}

DatasetEntry describe_piece(const std::string& name, const std::string& archive, const std::string& split,
                            const PieceTensors& piece, int notes, const std::string& style) {
  DatasetEntry e;
  e.piece = name;
  e.archive = archive;
  e.split = split;
  e.frames = piece.frames();
  e.notes = notes;
  e.art_fraction = fraction_on(piece.conditions.c_art);
  e.dyn_fraction = fraction_on(piece.conditions.c_dyn);
  e.style = style;
  return e;
}

std::vector<DatasetEntry> prepare_synthetic(const std::filesystem::path& out_dir, const SyntheticOptions& options,
                                            const FrameGrid& grid, const PrepareLog& log) {
  if (options.train_pieces < 4) throw std::invalid_argument("synthetic corpus needs at least 4 pieces");
  if (options.eval_pieces < 0) throw std::invalid_argument("synthetic eval piece count must be >= 0");
  std::filesystem::create_directories(out_dir);
  std::vector<DatasetEntry> entries;
  auto emit = [&](const ToyPiece& toy, const std::string& name, const std::string& split) {
    const PieceTensors tensors = featurize(toy, grid);
    const std::string archive = name + ".npz";
    save_piece(out_dir / archive, tensors, grid);
    entries.push_back(describe_piece(name, archive, split, tensors, static_cast<int>(toy.events.size()),
                                     toy.style.cell_name()));
    if (log) log(entries.back(), "");
  };
  for (int i = 0; i < options.train_pieces; ++i) {
    emit(generate_piece(piece_seed(options.seed, i), style_for_cell(i), options.piece_seconds, grid),
         index_name("toy_", i), "train");
  }
  for (int i = 0; i < options.eval_pieces; ++i) {
    emit(generate_piece(piece_seed(options.seed, options.train_pieces + i), style_for_cell(i),
                        options.piece_seconds, grid),
         index_name("toy_eval_", i), "test");
  }
  write_dataset_manifest(out_dir / kDatasetManifestName, entries);
  return entries;
}

std::vector<DatasetEntry> prepare_sources(const std::vector<SourcePair>& sources,
                                          const std::filesystem::path& out_dir, const FrameGrid& grid,
                                          const PrepareLog& log) {
  if (sources.empty()) throw std::runtime_error("source manifest lists no pieces");
  std::filesystem::create_directories(out_dir);
  std::vector<DatasetEntry> entries;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    const std::string name = index_name("piece_", static_cast<int>(i)) + "_" + src.midi.stem().string();
    try {
      const auto midi = read_midi_file(src.midi);
      const auto audio = read_wav(src.audio);
      const double duration = static_cast<double>(audio.samples.size()) / audio.sample_rate;
      const PieceTensors tensors = featurize_performance(midi.notes, audio.samples, audio.sample_rate, duration, grid);
      const std::string archive = name + ".npz";
      save_piece(out_dir / archive, tensors, grid);
      entries.push_back(describe_piece(name, archive, src.split.empty() ? "train" : src.split, tensors,
                                       static_cast<int>(midi.notes.size()), ""));
      if (log) log(entries.back(), "");
    } catch (const std::exception& e) {
      DatasetEntry skipped;
      skipped.piece = name;
      if (log) log(skipped, std::string("skipped: ") + e.what());
    }
  }
  if (entries.empty()) throw std::runtime_error("every source pair failed to prepare");
  write_dataset_manifest(out_dir / kDatasetManifestName, entries);
  return entries;
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& split) {
  const auto manifest = dir / kDatasetManifestName;
  if (!std::filesystem::exists(manifest)) {
    throw std::runtime_error("no prepared data in " + dir.string() + " (missing " + kDatasetManifestName + ")");
  }
  Dataset out;
  bool first = true;
  for (const auto& e : read_dataset_manifest(manifest)) {
    if (e.split != split) continue;
    auto loaded = load_piece(dir / e.archive);
    if (first) {
      out.grid = loaded.grid;
      first = false;
    } else if (!(loaded.grid == out.grid)) {
      throw std::runtime_error(e.archive + " uses a different frame grid from the rest of the split");
    }
    out.entries.push_back(e);
    out.pieces.push_back(std::move(loaded.tensors));
  }
  if (out.pieces.empty()) throw std::runtime_error("split '" + split + "' is empty in " + dir.string());
  return out;
}

}  // namespace pianogm
