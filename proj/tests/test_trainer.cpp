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
#include <set>
#include <sstream>

#include "pianogm/checkpoint.hpp"
#include "pianogm/npz.hpp"
#include "pianogm/piece_archive.hpp"
#include "pianogm/toy_corpus.hpp"
#include "pianogm/trainer.hpp"
#include "test_util.hpp"

namespace pianogm {
namespace {

using testing::grid_50fps;

TrainConfig tiny_train_config() {
  TrainConfig c;
  c.batch_size = 2;
  c.max_steps = 12;
  c.crop_seconds = 1.0;
  c.seed = 21;
  c.model.latent_dim = 2;
  c.model.encoder_hidden = 6;
  c.model.decoder_hidden = 6;
  c.model.num_layers = 1;
  return c;
}

std::vector<PieceTensors> tiny_corpus(int n = 4, double seconds = 2.0, std::uint64_t seed = 5) {
  std::vector<PieceTensors> out;
  for (const auto& p : generate_corpus(seed, n, seconds, grid_50fps())) out.push_back(featurize(p, grid_50fps()));
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(KlWeight, WarmupEndpoints) {
  TrainConfig c;
  c.max_steps = 2000;
  c.kl_warmup_fraction = 0.25;
  EXPECT_EQ(kl_weight(0, c), 0.0);
  EXPECT_DOUBLE_EQ(kl_weight(250, c), 0.5);
  EXPECT_EQ(kl_weight(500, c), 1.0);
  EXPECT_EQ(kl_weight(1999, c), 1.0);
  c.kl_warmup_fraction = 0.0;
  EXPECT_EQ(kl_weight(0, c), 1.0);
}

TEST(TrainConfig, ValidationAndJson) {
  TrainConfig c = tiny_train_config();
  c.ce_gradient_to_latent = false;
  EXPECT_EQ(TrainConfig::from_json(c.to_json()), c);
  EXPECT_EQ(TrainConfig{}.crop_seconds, 20.0);
  for (auto mutate : std::vector<void (*)(TrainConfig&)>{
           [](TrainConfig& x) { x.batch_size = 0; }, [](TrainConfig& x) { x.learning_rate = 0; },
           [](TrainConfig& x) { x.kl_warmup_fraction = 1.5; }, [](TrainConfig& x) { x.max_steps = -1; },
           [](TrainConfig& x) { x.lambda_ce = 0; }, [](TrainConfig& x) { x.crop_seconds = 0; }}) {
    TrainConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), std::invalid_argument);
  }
}

TEST(FeatureStatistics, PooledMomentsAndConstantBins) {
  PieceTensors a, b;
  a.mel.data = FloatMatrix::Constant(2, kNumMels, -3.0f);
  b.mel.data = FloatMatrix::Constant(2, kNumMels, -3.0f);
  a.mel.data.col(5) << 0.0f, 2.0f;
  b.mel.data.col(5) << 4.0f, 6.0f;  // pooled: mean 3, population sd sqrt(5)
  const std::vector<PieceTensors> pieces{a, b};
  const auto [mean, scale] = feature_statistics(pieces);
  EXPECT_FLOAT_EQ(mean[5], 3.0f);
  EXPECT_FLOAT_EQ(scale[5], std::sqrt(5.0f));
  EXPECT_FLOAT_EQ(mean[0], -3.0f);
  EXPECT_EQ(scale[0], 1.0f);
}

TEST(Adam, MatchesHandComputedUpdates) {
  Parameter<float> p("w", 1, 1);
  p.value(0, 0) = 1.0f;
  ParameterList<float> params{&p};
  AdamState state;
  AdamOptions o;
  o.learning_rate = 0.1;
  double m = 0, v = 0, w = 1.0;
  for (int t = 1; t <= 3; ++t) {
    const double g = 0.5 * t;
    p.grad(0, 0) = static_cast<float>(g);
    adam_update(params, state, o);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.value(0, 0), w, 1e-5) << t;  // float moments
  }
  EXPECT_EQ(state.updates, 3);
}

TEST(Clip, RescalesToMaxNorm) {
  Parameter<float> a("a", 2, 1), b("b", 1, 1);
  a.grad << 3.0f, 0.0f;
  b.grad << 4.0f;
  ParameterList<float> params{&a, &b};
  EXPECT_DOUBLE_EQ(clip_gradient_norm(params, 10.0), 5.0);
  EXPECT_FLOAT_EQ(a.grad(0, 0), 3.0f);
  EXPECT_DOUBLE_EQ(clip_gradient_norm(params, 1.0), 5.0);
  EXPECT_NEAR(std::sqrt(a.grad.squaredNorm() + b.grad.squaredNorm()), 1.0, 1e-6);
}

TEST(PlanBatch, EpochVisitsEveryPieceOnceWithValidOffsets) {
  TrainConfig c = tiny_train_config();
  c.batch_size = 2;
  const std::vector<int> frames{100, 120, 80, 200};
  std::multiset<int> seen;
  for (int step = 0; step < 2; ++step) {
    for (const auto& p : plan_batch(frames, 50, step, c)) {
      seen.insert(p.piece);
      EXPECT_GE(p.start_frame, 0);
      EXPECT_LE(p.start_frame + 50, frames[p.piece]);
    }
  }
  EXPECT_EQ(seen, (std::multiset<int>{0, 1, 2, 3}));
  const auto a = plan_batch(frames, 50, 1, c);
  const auto b = plan_batch(frames, 50, 1, c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].piece, b[i].piece);
    EXPECT_EQ(a[i].start_frame, b[i].start_frame);
  }
  EXPECT_THROW(plan_batch(std::vector<int>{10}, 50, 0, c), std::invalid_argument);
}

TEST(MakeBatch, TimeMajorLayout) {
  const auto pieces = tiny_corpus();
  std::vector<PieceTensors> crops{crop_frames(pieces[0], 0, 10), crop_frames(pieces[3], 5, 10)};
  const auto b = make_batch<float>(crops);
  EXPECT_EQ(b.batch, 2);
  EXPECT_EQ(b.frames(), 10);
  for (int t = 0; t < 10; ++t) {
    EXPECT_EQ(b.mel.col(t * 2 + 1), crops[1].mel.data.row(t).transpose());
    EXPECT_EQ(b.c_art[t * 2], crops[0].conditions.c_art[t]);
    EXPECT_EQ(b.onset(60, t * 2 + 1), crops[1].onset.data(t, 60));
  }
  crops[1] = crop_frames(pieces[3], 5, 9);
  EXPECT_THROW(make_batch<float>(crops), std::invalid_argument);
}

TEST(TrainStep, DeterministicAndFiniteLossLeavesStateAlone) {
  const auto pieces = tiny_corpus();
  const auto c = tiny_train_config();
  std::vector<PieceTensors> crops{crop_frames(pieces[0], 0, 50), crop_frames(pieces[1], 0, 50)};
  const auto batch = make_batch<float>(crops);
  auto s1 = init_train_state(c, pieces);
  auto s2 = init_train_state(c, pieces);
  for (int i = 0; i < 3; ++i) {
    const auto a = train_step(s1, batch);
    const auto b = train_step(s2, batch);
    EXPECT_EQ(a.loss.total, b.loss.total);
    EXPECT_EQ(a.step, i + 1);
  }

  auto bad = batch;
  bad.mel(0, 0) = std::numeric_limits<float>::quiet_NaN();
  const auto params_before = s1.model.parameters()[0]->value;
  const auto rng_before = s1.rng;
  EXPECT_THROW(train_step(s1, bad), NonFiniteLoss);
  EXPECT_EQ(s1.step, 3);
  EXPECT_EQ(s1.rng, rng_before);
  EXPECT_EQ(s1.model.parameters()[0]->value, params_before);
  EXPECT_EQ(s1.optimizer.updates, 3);
}

TEST(Evaluate, PerfectSeparationGivesFullAccuracy) {
  auto prior = MixturePrior<float>::symmetric(4);
  const std::vector<std::uint8_t> labels{0, 1, 1, 0, 1};
  Matrix<float> z(4, 5);
  for (int t = 0; t < 5; ++t) z.col(t) = prior.means.col(labels[t]);
  EXPECT_EQ(condition_accuracy<float>(z, labels, prior), 1.0);
  z.col(0) = prior.means.col(1);
  EXPECT_DOUBLE_EQ(condition_accuracy<float>(z, labels, prior), 0.8);
}

TEST(Evaluate, ChanceAccuracyAtInit) {
  // One untrained encoder can correlate with the labels by luck; chance holds
  // over the (sign-symmetric) initialisation distribution.
  const auto pieces = tiny_corpus(8, 4.0, 99);
  TrainConfig c = tiny_train_config();
  c.model.latent_dim = 4;
  c.model.encoder_hidden = 16;
  double mean_art = 0, mean_dyn = 0;
  const int seeds = 8;
  for (int seed = 0; seed < seeds; ++seed) {
    c.seed = seed;
    auto s = init_train_state(c, pieces);
    const auto m = evaluate(s.model, pieces);
    mean_art += m.accuracy_art / seeds;
    mean_dyn += m.accuracy_dyn / seeds;
    for (auto* p : s.model.parameters()) {
      if (p->name.find(".mean.") != std::string::npos) p->value = -p->value;
    }
    const auto mirrored = evaluate(s.model, pieces);
    EXPECT_NEAR(m.accuracy_art + mirrored.accuracy_art, 1.0, 1e-12) << seed;
    EXPECT_NEAR(m.accuracy_dyn + mirrored.accuracy_dyn, 1.0, 1e-12) << seed;
  }
  EXPECT_NEAR(mean_art, 0.5, 0.1);
  EXPECT_NEAR(mean_dyn, 0.5, 0.1);
}

TEST(Evaluate, SplitEqualsWeightedShardAverage) {
  const auto pieces = tiny_corpus(4, 2.0);
  auto c = tiny_train_config();
  const auto s = init_train_state(c, pieces);
  const std::vector<PieceTensors> a(pieces.begin(), pieces.begin() + 1), b(pieces.begin() + 1, pieces.end());
  const auto whole = evaluate(s.model, pieces);
  const auto merged = evaluate(s.model, a).merged(evaluate(s.model, b));
  EXPECT_EQ(whole.frames, merged.frames);
  EXPECT_NEAR(whole.recon, merged.recon, 1e-9 * whole.recon);
  EXPECT_NEAR(whole.kl_dyn, merged.kl_dyn, 1e-9);
  EXPECT_NEAR(whole.accuracy_art, merged.accuracy_art, 1e-12);
  EXPECT_THROW(evaluate(s.model, {}), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  testing::TempDir dir;
  const auto pieces = tiny_corpus();
  auto c = tiny_train_config();
  auto s = init_train_state(c, pieces);
  std::vector<PieceTensors> crops{crop_frames(pieces[0], 0, 50), crop_frames(pieces[1], 0, 50)};
  train_step(s, make_batch<float>(crops));
  save_checkpoint(s, dir / "c.npz", grid_50fps());
  EXPECT_TRUE(std::filesystem::exists(checkpoint_sidecar_path(dir / "c.npz")));
  const auto loaded = load_checkpoint(dir / "c.npz");
  EXPECT_EQ(loaded.grid, grid_50fps());
  EXPECT_EQ(loaded.state.config, s.config);
  EXPECT_EQ(loaded.state.step, s.step);
  EXPECT_EQ(loaded.state.rng, s.rng);
  EXPECT_EQ(loaded.state.optimizer.updates, s.optimizer.updates);
  const auto pa = s.model.parameters();
  const auto pb = loaded.state.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
    EXPECT_EQ(s.optimizer.first[i], loaded.state.optimizer.first[i]);
    EXPECT_EQ(s.optimizer.second[i], loaded.state.optimizer.second[i]);
  }
  EXPECT_EQ(s.model.feature_mean(), loaded.state.model.feature_mean());
  EXPECT_EQ(s.model.feature_scale(), loaded.state.model.feature_scale());
}

TEST(Checkpoint, CorruptTruncatedForeignAndVersionMismatchRejected) {
  testing::TempDir dir;
  const auto pieces = tiny_corpus();
  const auto s = init_train_state(tiny_train_config(), pieces);
  save_checkpoint(s, dir / "c.npz");
  const auto bytes = slurp(dir / "c.npz");

  std::ofstream(dir / "cut.npz", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(load_checkpoint(dir / "cut.npz"), std::runtime_error);

  auto flipped = bytes;
  flipped[bytes.size() / 3] ^= 0x11;
  std::ofstream(dir / "flip.npz", std::ios::binary) << flipped;
  EXPECT_THROW(load_checkpoint(dir / "flip.npz"), std::runtime_error);

  auto npz = NpzArchive::load(dir / "c.npz");
  const std::int64_t v = 99;
  npz.put("version", NpyArray::from<std::int64_t>(std::span(&v, 1), {}));
  npz.save(dir / "v.npz");
  try {
    load_checkpoint(dir / "v.npz");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  save_piece(dir / "piece.npz", pieces[0], grid_50fps());
  EXPECT_THROW(load_checkpoint(dir / "piece.npz"), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir / "absent.npz"), std::runtime_error);
}

TEST(RunTraining, MetricsCsvDeterministicAndResumeReplaysExactly) {
  testing::TempDir dir;
  const auto pieces = tiny_corpus(4, 2.0);
  auto c = tiny_train_config();
  c.checkpoint_every = 4;
  c.eval_every = 6;
  TrainingRun run;
  run.grid = grid_50fps();

  auto full = init_train_state(c, pieces);
  run.metrics_csv = dir / "a.csv";
  run.eval_csv = dir / "a_eval.csv";
  run.checkpoint_dir = dir / "a";
  run_training(full, pieces, pieces, run);

  auto again = init_train_state(c, pieces);
  run.metrics_csv = dir / "b.csv";
  run.eval_csv = dir / "b_eval.csv";
  run.checkpoint_dir = dir / "b";
  run_training(again, pieces, pieces, run);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));

  const auto lines = slurp(dir / "a.csv");
  EXPECT_EQ(lines.substr(0, lines.find('\n')), kMetricsHeader);
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 13);

  // Resume the second run from step 4: copy the CSV as it was then.
  auto resumed = load_checkpoint(dir / "b" / "step_4.npz").state;
  EXPECT_EQ(resumed.step, 4);
  run.checkpoint_dir = dir / "c";
  run.metrics_csv = dir / "c.csv";
  run.eval_csv = dir / "c_eval.csv";
  std::filesystem::copy_file(dir / "b.csv", dir / "c.csv");  // rows past step 4 are dropped on resume
  run_training(resumed, pieces, pieces, run);
  EXPECT_EQ(slurp(dir / "c.csv"), slurp(dir / "a.csv"));
  EXPECT_EQ(slurp(dir / "a" / "final.npz"), slurp(dir / "c" / "final.npz"));
}

TEST(RunTraining, ShortPiecesSkippedAndAllShortRejected) {
  auto pieces = tiny_corpus(4, 2.0);
  auto c = tiny_train_config();
  c.max_steps = 2;
  c.crop_seconds = 1.5;
  pieces.push_back(crop_frames(pieces[0], 0, 20));
  auto s = init_train_state(c, pieces);
  TrainingRun run;
  run.grid = grid_50fps();
  EXPECT_NO_THROW(run_training(s, pieces, {}, run));
  c.crop_seconds = 5.0;
  auto t = init_train_state(c, pieces);
  EXPECT_THROW(run_training(t, pieces, {}, run), std::runtime_error);
}

}  // namespace
}  // namespace pianogm
