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

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "test_util.hpp"

namespace pianogm {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string output;
};

Result run_cli(const fs::path& workdir, const std::string& args) {
  const fs::path log = workdir / "cli.log";
  const std::string cmd = std::string(PIANOGM_CLI) + " --workdir '" + workdir.string() + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream s;
  s << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// One prepared dataset and one short training run shared by every test.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    const auto prep = run_cli(dir_->path(), "--seed 3 prepare --synthetic 16 --synthetic-eval 4 --piece-seconds 4");
    ASSERT_EQ(prep.code, 0) << prep.output;
    const auto train = run_cli(dir_->path(),
                               "--seed 3 train --max-steps 10 --batch-size 2 --crop-seconds 2 --latent-dim 2 "
                               "--encoder-hidden 8 --decoder-hidden 8 --layers 1 --eval-every 5");
    ASSERT_EQ(train.code, 0) << train.output;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path work() { return dir_->path(); }
  static fs::path checkpoint() { return work() / "run" / "checkpoints" / "final.npz"; }

  static testing::TempDir* dir_;
};

testing::TempDir* Cli::dir_ = nullptr;

TEST_F(Cli, SyntheticPrepareBalancesCellsAndIsDeterministic) {
  const auto rows = lines(work() / "data" / "manifest.csv");
  ASSERT_EQ(rows.size(), 21u);
  std::map<std::string, int> train_cells;
  int test_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto style = rows[i].substr(rows[i].rfind(',') + 1);
    if (rows[i].find(",train,") != std::string::npos) ++train_cells[style];
    if (rows[i].find(",test,") != std::string::npos) ++test_rows;
  }
  EXPECT_EQ(test_rows, 4);
  ASSERT_EQ(train_cells.size(), 4u);
  for (const auto& [style, n] : train_cells) EXPECT_EQ(n, 4) << style;

  testing::TempDir again;
  ASSERT_EQ(run_cli(again.path(), "--seed 3 prepare --synthetic 16 --synthetic-eval 4 --piece-seconds 4").code, 0);
  EXPECT_EQ(slurp(again / "data/toy_0007.npz"), slurp(work() / "data/toy_0007.npz"));
  EXPECT_EQ(slurp(again / "data/manifest.csv"), slurp(work() / "data/manifest.csv"));
  EXPECT_TRUE(fs::exists(work() / "data" / "run_prepare.json"));
}

TEST_F(Cli, PrepareRejectsEmptyManifestAndMissingSource) {
  testing::TempDir d;
  std::ofstream(d / "empty.csv") << "midi,audio,split\n";
  const auto r = run_cli(d.path(), "prepare --manifest empty.csv");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find("no pieces"), std::string::npos) << r.output;
  EXPECT_NE(run_cli(d.path(), "prepare").code, 0);
  EXPECT_NE(run_cli(d.path(), "prepare --synthetic 4 --manifest empty.csv").code, 0);
}

TEST_F(Cli, TrainWritesOneRowPerStepAndProvenance) {
  const auto rows = lines(work() / "run" / "metrics.csv");
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0], "step,recon,kl_art,kl_dyn,ce_art,ce_dyn,acc_art,acc_dyn");
  EXPECT_EQ(rows[10].substr(0, 3), "10,");
  EXPECT_EQ(lines(work() / "run" / "eval.csv").size(), 3u);
  EXPECT_TRUE(fs::exists(checkpoint()));
  const auto meta = nlohmann::json::parse(slurp(work() / "run" / "run_train.json"));
  EXPECT_EQ(meta.at("command"), "train");
  EXPECT_EQ(meta.at("seed"), 3);
  EXPECT_TRUE(meta.contains("config"));
  EXPECT_TRUE(meta.contains("timestamp"));
}

TEST_F(Cli, ResumeContinuesStepCount) {
  const std::string train =
      "--seed 3 train --out resumed --batch-size 2 --crop-seconds 2 --latent-dim 2 --encoder-hidden 8 "
      "--decoder-hidden 8 --layers 1 ";
  ASSERT_EQ(run_cli(work(), train + "--max-steps 4").code, 0);
  const auto r = run_cli(work(), "--seed 3 train --out resumed --resume --max-steps 7");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(work() / "resumed" / "metrics.csv");
  ASSERT_EQ(rows.size(), 8u);
  for (int step = 1; step <= 7; ++step) EXPECT_EQ(rows[step].substr(0, rows[step].find(',')), std::to_string(step));
  EXPECT_NE(run_cli(work(), "train --out nothing_here --resume").code, 0);
}

TEST_F(Cli, MorphRejectsEqualComponentsAndRendersAllScenarios) {
  const std::string base = "morph --checkpoint run/checkpoints/final.npz --piece data/toy_0001.npz --iterations 4 ";
  const auto same = run_cli(work(), base + "--factor art --from 0 --to 0");
  EXPECT_NE(same.code, 0);
  EXPECT_NE(run_cli(work(), base + "--factor tempo --from 0 --to 1").code, 0);

  const auto all = run_cli(work(), base + "--all-scenarios --out morph_all");
  ASSERT_EQ(all.code, 0) << all.output;
  int wavs = 0;
  for (const auto& e : fs::directory_iterator(work() / "morph_all")) wavs += e.path().extension() == ".wav";
  EXPECT_EQ(wavs, 4);
  EXPECT_TRUE(fs::exists(work() / "morph_all" / "morph_grid.png"));
  EXPECT_TRUE(fs::exists(work() / "morph_all" / "art_0to1_dyn0_latents.npz"));
  EXPECT_TRUE(fs::exists(work() / "morph_all" / "run_morph.json"));

  ASSERT_EQ(run_cli(work(), base + "--factor dyn --from 1 --to 0 --out m1").code, 0);
  ASSERT_EQ(run_cli(work(), base + "--factor dyn --from 1 --to 0 --out m2").code, 0);
  bool compared = false;
  for (const auto& e : fs::directory_iterator(work() / "m1")) {
    if (e.path().extension() != ".wav") continue;
    EXPECT_EQ(slurp(e.path()), slurp(work() / "m2" / e.path().filename()));
    compared = true;
  }
  EXPECT_TRUE(compared);
}

TEST_F(Cli, TransferWritesAudioAndThreePanelFigure) {
  const auto r = run_cli(work(), "transfer --checkpoint run/checkpoints/final.npz --content data/toy_0000.npz "
                                 "--style data/toy_0003.npz --iterations 4");
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* f : {"transfer.wav", "transfer.png", "transfer_latents.npz", "run_transfer.json"}) {
    EXPECT_TRUE(fs::exists(work() / "transfer" / f)) << f;
  }
  const std::string base = "transfer --checkpoint run/checkpoints/final.npz --content data/toy_0000.npz "
                           "--style data/toy_0003.npz --iterations 4 ";
  ASSERT_EQ(run_cli(work(), base + "--mode sample --out t_sample").code, 0);
  ASSERT_EQ(run_cli(work(), "--seed 4 " + base + "--mode sample --out t_sample4").code, 0);
  ASSERT_EQ(run_cli(work(), base + "--mode sample --out t_sample_again").code, 0);
  const auto mean_wav = slurp(work() / "transfer" / "transfer.wav");
  EXPECT_NE(slurp(work() / "t_sample" / "transfer.wav"), mean_wav);
  EXPECT_NE(slurp(work() / "t_sample" / "transfer.wav"), slurp(work() / "t_sample4" / "transfer.wav"));
  EXPECT_EQ(slurp(work() / "t_sample" / "transfer.wav"), slurp(work() / "t_sample_again" / "transfer.wav"));
  EXPECT_NE(run_cli(work(), "transfer --checkpoint run/checkpoints/final.npz --content data/nope.npz "
                            "--style data/toy_0003.npz").code,
            0);
}

TEST_F(Cli, EvalWritesSplitCsv) {
  const auto r = run_cli(work(), "eval --checkpoint run/checkpoints/final.npz --split test");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(work() / "eval" / "eval_test.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "step,recon,kl_art,kl_dyn,acc_art,acc_dyn,frames");
  EXPECT_NE(run_cli(work(), "eval --checkpoint run/checkpoints/final.npz --split nosuch").code, 0);
  EXPECT_NE(run_cli(work(), "eval --checkpoint data/toy_0000.npz").code, 0);
}

}  // namespace
}  // namespace pianogm
