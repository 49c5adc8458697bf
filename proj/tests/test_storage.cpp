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

#include <gtest/gtest.h>

#include <fstream>

#include "pianogm/dataset.hpp"
#include "pianogm/manifest.hpp"
#include "pianogm/npz.hpp"
#include "pianogm/piece_archive.hpp"
#include "pianogm/toy_corpus.hpp"
#include "test_util.hpp"

namespace pianogm {
namespace {

TEST(Npz, RoundTripsEveryDtype) {
  testing::TempDir dir;
  NpzArchive a;
  const std::vector<float> f{1.5f, -2.0f, 3.25f, 0.0f, 7.0f, 8.0f};
  const std::vector<double> d{1e-300, 2.0};
  const std::vector<std::uint8_t> u{0, 1, 255};
  const std::vector<std::int64_t> i{-5};
  a.put("f", NpyArray::from<float>(f, {2, 3}));
  a.put("d", NpyArray::from<double>(d, {2}));
  a.put("u", NpyArray::from<std::uint8_t>(u, {3}));
  a.put("i", NpyArray::from<std::int64_t>(i, {}));
  a.put("t", NpyArray::from_text("hello"));
  a.save(dir / "a.npz");
  const auto b = NpzArchive::load(dir / "a.npz");
  EXPECT_EQ(b.names(), (std::vector<std::string>{"d", "f", "i", "t", "u"}));
  EXPECT_EQ(b.at("f").values<float>(), f);
  EXPECT_EQ(b.at("f").shape, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(b.at("d").values<double>(), d);
  EXPECT_EQ(b.at("u").values<std::uint8_t>(), u);
  EXPECT_EQ(b.at("i").values<std::int64_t>(), i);
  EXPECT_TRUE(b.at("i").shape.empty());
  EXPECT_EQ(b.at("t").text(), "hello");
  EXPECT_THROW(b.at("f").values<double>(), std::runtime_error);
  EXPECT_THROW(b.at("missing"), std::runtime_error);
}

TEST(Npz, SerializationIsDeterministic) {
  NpzArchive a;
  a.put("x", NpyArray::from_text("abc"));
  EXPECT_EQ(a.serialize(), a.serialize());
}

TEST(Npz, DetectsCorruptionAndTruncation) {
  NpzArchive a;
  const std::vector<float> f(100, 1.0f);
  a.put("f", NpyArray::from<float>(f, {100}));
  auto bytes = a.serialize();
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x5a;
  EXPECT_THROW(NpzArchive::parse(flipped), std::runtime_error);
  auto cut = bytes;
  cut.resize(bytes.size() - 30);
  EXPECT_THROW(NpzArchive::parse(cut), std::runtime_error);
}

PieceTensors small_piece() {
  const FrameGrid g = testing::grid_50fps();
  const auto toy = generate_piece(1, style_for_cell(3), 3.0, g);
  return featurize(toy, g);
}

TEST(PieceArchive, RoundTripWithSidecar) {
  testing::TempDir dir;
  const FrameGrid g = testing::grid_50fps();
  const auto p = small_piece();
  save_piece(dir / "p.npz", p, g);
  EXPECT_TRUE(std::filesystem::exists(grid_sidecar_path(dir / "p.npz")));
  const auto q = load_piece(dir / "p.npz");
  EXPECT_EQ(q.grid, g);
  EXPECT_EQ(q.tensors.mel.data, p.mel.data);
  EXPECT_EQ(q.tensors.onset.data, p.onset.data);
  EXPECT_EQ(q.tensors.frame.data, p.frame.data);
  EXPECT_EQ(q.tensors.conditions.c_art, p.conditions.c_art);
  EXPECT_EQ(q.tensors.conditions.c_dyn, p.conditions.c_dyn);

  const auto keys = NpzArchive::load(dir / "p.npz").names();
  EXPECT_EQ(keys, (std::vector<std::string>{"c_art", "c_dyn", "frame", "mel", "onset"}));
}

TEST(PieceArchive, RejectsNonBinaryRolls) {
  testing::TempDir dir;
  const auto p = small_piece();
  save_piece(dir / "p.npz", p, testing::grid_50fps());
  auto npz = NpzArchive::load(dir / "p.npz");
  auto onset = npz.at("onset");
  onset.bytes[0] = 2;
  npz.put("onset", onset);
  npz.save(dir / "p.npz");
  EXPECT_THROW(load_piece(dir / "p.npz"), std::runtime_error);
}

TEST(PieceArchive, RejectsMisalignedTensors) {
  testing::TempDir dir;
  auto p = small_piece();
  p.conditions.c_dyn.pop_back();
  EXPECT_THROW(save_piece(dir / "p.npz", p, testing::grid_50fps()), std::invalid_argument);
}

TEST(Csv, QuotedFieldsAndCrlf) {
  const auto t = parse_csv("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",3\r\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.column({"zz", "c"}), 2);
  EXPECT_EQ(t.column({"zz"}), -1);
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("plain"), "plain");
}

TEST(SourceManifest, MaestroColumns) {
  testing::TempDir dir;
  std::ofstream(dir / "m.csv") << "canonical_composer,split,midi_filename,audio_filename\n"
                                  "X,train,2004/a.midi,2004/a.wav\nY,test,/abs/b.midi,/abs/b.wav\n";
  const auto pairs = read_source_manifest(dir / "m.csv", dir.path());
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].midi, dir.path() / "2004/a.midi");
  EXPECT_EQ(pairs[0].split, "train");
  EXPECT_EQ(pairs[1].audio, std::filesystem::path("/abs/b.wav"));
}

TEST(SourceManifest, MissingColumnsRejected) {
  testing::TempDir dir;
  std::ofstream(dir / "m.csv") << "foo,bar\n1,2\n";
  EXPECT_THROW(read_source_manifest(dir / "m.csv", dir.path()), std::runtime_error);
}

TEST(Dataset, SyntheticPrepareAndLoad) {
  testing::TempDir dir;
  SyntheticOptions o;
  o.train_pieces = 4;
  o.eval_pieces = 4;
  o.piece_seconds = 3.0;
  o.seed = 5;
  std::vector<std::string> lines;
  const auto entries =
      prepare_synthetic(dir.path(), o, testing::grid_50fps(), [&](const DatasetEntry& e, const std::string&) {
        lines.push_back(summarize(e));
      });
  ASSERT_EQ(entries.size(), 8u);
  EXPECT_EQ(lines.size(), 8u);
  EXPECT_NE(lines[0].find("T=150"), std::string::npos) << lines[0];
  const auto train = load_dataset(dir.path(), "train");
  const auto test = load_dataset(dir.path(), "test");
  EXPECT_EQ(train.pieces.size(), 4u);
  EXPECT_EQ(test.pieces.size(), 4u);
  EXPECT_EQ(train.grid, testing::grid_50fps());
  EXPECT_NE(train.pieces[0].mel.data, test.pieces[0].mel.data);
  EXPECT_THROW(load_dataset(dir.path(), "validation"), std::runtime_error);
  EXPECT_THROW(load_dataset(dir / "nothing", "train"), std::runtime_error);
}

TEST(Dataset, SourcesSkipUnreadableAndFailWhenAllFail) {
  testing::TempDir dir;
  std::vector<SourcePair> sources{{dir / "missing.mid", dir / "missing.wav", "train"}};
  std::vector<std::string> messages;
  EXPECT_THROW(prepare_sources(sources, dir / "out", FrameGrid{},
                               [&](const DatasetEntry&, const std::string& m) { messages.push_back(m); }),
               std::runtime_error);
  ASSERT_EQ(messages.size(), 1u);
  EXPECT_NE(messages[0].find("skipped"), std::string::npos);
  EXPECT_THROW(prepare_sources({}, dir / "out", FrameGrid{}), std::runtime_error);
}

}  // namespace
}  // namespace pianogm
