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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pianogm/grid.hpp"
#include "pianogm/networks.hpp"
#include "pianogm/roll.hpp"

namespace pianogm {

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 1e-3;
  int max_steps = 2000;
  double kl_warmup_fraction = 0.25;
  double lambda_ce = 1.0;
  double crop_seconds = 20.0;
  std::uint64_t seed = 0;
  int eval_every = 0;        // 0 disables periodic evaluation
  int checkpoint_every = 0;  // 0 keeps only the final checkpoint
  double grad_clip_norm = 5.0;
  bool ce_gradient_to_latent = true;
  ModelConfig model;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  bool operator==(const TrainConfig&) const = default;
};

/// KL weight: linear 0 -> 1 over the first kl_warmup_fraction * max_steps
/// steps, then 1.
double kl_weight(int step, const TrainConfig& config);

/// Adam moments, one pair per parameter in model parameter order.
struct AdamState {
  std::vector<Matrix<float>> first;
  std::vector<Matrix<float>> second;
  std::int64_t updates = 0;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void adam_update(ParameterList<float>& params, AdamState& state, const AdamOptions& options);

/// Rescales gradients so their global L2 norm is at most max_norm; returns
/// the norm before clipping.
double clip_gradient_norm(ParameterList<float>& params, double max_norm);

/// Everything needed to resume training bit-exactly.
struct TrainState {
  TrainConfig config;
  GmvaeModel<float> model;
  AdamState optimizer;
  int step = 0;
  std::mt19937_64 rng;  // latent noise stream
};

/// Fresh state: weights from config.seed, feature normalisation from `train`.
TrainState init_train_state(const TrainConfig& config, std::span<const PieceTensors> train);

/// Per-bin mean and standard deviation of the Mel frames of `pieces`; bins
/// with a standard deviation below 1e-3 get scale 1.
std::pair<Vector<float>, Vector<float>> feature_statistics(std::span<const PieceTensors> pieces);

/// Stacks equal-length crops into a time-major batch.
template <typename S>
SequenceBatch<S> make_batch(std::span<const PieceTensors> crops);

struct CropPlan {
  int piece = 0;
  int start_frame = 0;
};

/// Crops used at `step`. Each epoch visits every piece once in an order and
/// with crop offsets drawn from an RNG seeded by (seed, epoch).
std::vector<CropPlan> plan_batch(std::span<const int> piece_frames, int window, int step,
                                 const TrainConfig& config);

struct StepMetrics {
  int step = 0;  // 1-based index of the completed step
  LossBreakdown<float> loss;
  double accuracy_art = 0.0;
  double accuracy_dyn = 0.0;
  double beta = 0.0;
  double grad_norm = 0.0;
};

/// One optimiser step on `batch`. Throws NonFiniteLoss (naming the term) if
/// the loss is not finite; the state is left unmodified in that case.
StepMetrics train_step(TrainState& state, const SequenceBatch<float>& batch);

/// Fraction of frames whose argmax responsibility equals the label.
template <typename S>
double condition_accuracy(const LatentSequence<S>& z, std::span<const std::uint8_t> labels,
                          const MixturePrior<S>& prior);

struct EvalMetrics {
  double recon = 0.0;
  double kl_art = 0.0;
  double kl_dyn = 0.0;
  double accuracy_art = 0.0;
  double accuracy_dyn = 0.0;
  long frames = 0;

  /// Frame-weighted combination of two disjoint shards.
  EvalMetrics merged(const EvalMetrics& other) const;
};

/// Posterior-mean evaluation over whole pieces (one sequence each).
EvalMetrics evaluate(const GmvaeModel<float>& model, std::span<const PieceTensors> pieces);
EvalMetrics evaluate_piece(const GmvaeModel<float>& model, const PieceTensors& piece);

inline constexpr const char* kMetricsHeader = "step,recon,kl_art,kl_dyn,ce_art,ce_dyn,acc_art,acc_dyn";
std::string metrics_row(const StepMetrics& m);
std::string eval_row(int step, const EvalMetrics& m);
inline constexpr const char* kEvalHeader = "step,recon,kl_art,kl_dyn,acc_art,acc_dyn,frames";

inline constexpr const char* kLatestCheckpoint = "latest.npz";

struct TrainingRun {
  FrameGrid grid;                         // sets the crop length in frames
  std::filesystem::path metrics_csv;      // per-step rows; continued on resume
  std::filesystem::path eval_csv;         // optional
  std::filesystem::path checkpoint_dir;   // optional; step_N, latest and final .npz
  std::function<void(const StepMetrics&)> on_step;
};

/// Trains from state.step to config.max_steps over random crops of `train`.
/// Pieces shorter than the crop window are skipped.
void run_training(TrainState& state, std::span<const PieceTensors> train,
                  std::span<const PieceTensors> eval, const TrainingRun& run);

}  // namespace pianogm
