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

#include "pianogm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "pianogm/checkpoint.hpp"

namespace pianogm {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid training config: " + what); };
  if (batch_size <= 0) fail("batch_size must be positive");
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (max_steps <= 0) fail("max_steps must be positive");
  if (!(kl_warmup_fraction >= 0 && kl_warmup_fraction <= 1)) fail("kl_warmup_fraction must be in [0, 1]");
  if (!(lambda_ce > 0)) fail("lambda_ce must be positive");
  if (!(crop_seconds > 0)) fail("crop_seconds must be positive");
  if (eval_every < 0 || checkpoint_every < 0) fail("eval_every/checkpoint_every must be >= 0");
  if (!(grad_clip_norm > 0)) fail("grad_clip_norm must be positive");
  model.validate();
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["max_steps"] = max_steps;
  j["kl_warmup_fraction"] = kl_warmup_fraction;
  j["lambda_ce"] = lambda_ce;
  j["crop_seconds"] = crop_seconds;
  j["seed"] = seed;
  j["eval_every"] = eval_every;
  j["checkpoint_every"] = checkpoint_every;
  j["grad_clip_norm"] = grad_clip_norm;
  j["ce_gradient_to_latent"] = ce_gradient_to_latent;
  j["model"] = {{"latent_dim", model.latent_dim},
                {"encoder_hidden", model.encoder_hidden},
                {"decoder_hidden", model.decoder_hidden},
                {"num_layers", model.num_layers}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_steps = j.at("max_steps").get<int>();
  c.kl_warmup_fraction = j.at("kl_warmup_fraction").get<double>();
  c.lambda_ce = j.at("lambda_ce").get<double>();
  c.crop_seconds = j.at("crop_seconds").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_every = j.at("eval_every").get<int>();
  c.checkpoint_every = j.at("checkpoint_every").get<int>();
  c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  c.ce_gradient_to_latent = j.at("ce_gradient_to_latent").get<bool>();
  const auto& m = j.at("model");
  c.model.latent_dim = m.at("latent_dim").get<int>();
  c.model.encoder_hidden = m.at("encoder_hidden").get<int>();
  c.model.decoder_hidden = m.at("decoder_hidden").get<int>();
  c.model.num_layers = m.at("num_layers").get<int>();
  c.validate();
  return c;
}

double kl_weight(int step, const TrainConfig& config) {
  const double warmup = config.kl_warmup_fraction * config.max_steps;
  if (warmup <= 0.0) return 1.0;
  return std::min(1.0, step / warmup);
}

void adam_update(ParameterList<float>& params, AdamState& state, const AdamOptions& options) {
  if (state.first.size() != params.size()) {
    state.first.clear();
    state.second.clear();
    for (const auto* p : params) {
      state.first.push_back(Matrix<float>::Zero(p->value.rows(), p->value.cols()));
      state.second.push_back(Matrix<float>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++state.updates;
  const double t = static_cast<double>(state.updates);
  const auto step_size = static_cast<float>(options.learning_rate *
                                            std::sqrt(1.0 - std::pow(options.beta2, t)) /
                                            (1.0 - std::pow(options.beta1, t)));
  const auto b1 = static_cast<float>(options.beta1);
  const auto b2 = static_cast<float>(options.beta2);
  const auto eps = static_cast<float>(options.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first[i];
    auto& v = state.second[i];
    const auto& g = params[i]->grad;
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
    params[i]->value.array() -= step_size * m.array() / (v.array().sqrt() + eps);
  }
}

double clip_gradient_norm(ParameterList<float>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const auto scale = static_cast<float>(max_norm / norm);
    for (auto* p : params) p->grad *= scale;
  }
  return norm;
}

std::pair<Vector<float>, Vector<float>> feature_statistics(std::span<const PieceTensors> pieces) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumMels);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(kNumMels);
  long frames = 0;
  for (const auto& p : pieces) {
    const Eigen::MatrixXd mel = p.mel.data.cast<double>();
    sum += mel.colwise().sum().transpose();
    sq += mel.array().square().matrix().colwise().sum().transpose();
    frames += mel.rows();
  }
  if (frames == 0) return {Vector<float>::Zero(kNumMels), Vector<float>::Ones(kNumMels)};
  const Eigen::VectorXd mean = sum / frames;
  const Eigen::VectorXd var = (sq / frames - mean.cwiseProduct(mean)).cwiseMax(0.0);
  // Bins that never change (silent bands) are centred but left unscaled.
  const Eigen::VectorXd sd = var.cwiseSqrt();
  return {mean.cast<float>(), (sd.array() < 1e-3).select(1.0, sd).cast<float>()};
}

TrainState init_train_state(const TrainConfig& config, std::span<const PieceTensors> train) {
  config.validate();
  TrainState state{config, GmvaeModel<float>(config.model), {}, 0, std::mt19937_64(config.seed ^ 0x9e3779b97f4a7c15ULL)};
  state.model.init(config.seed);
  const auto [mean, scale] = feature_statistics(train);
  state.model.set_feature_normalization(mean, scale);
  return state;
}

template <typename S>
SequenceBatch<S> make_batch(std::span<const PieceTensors> crops) {
  if (crops.empty()) throw std::invalid_argument("make_batch: no crops");
  const int b = static_cast<int>(crops.size());
  const int t = crops[0].frames();
  SequenceBatch<S> batch;
  batch.batch = b;
  batch.mel.resize(kNumMels, static_cast<Eigen::Index>(t) * b);
  batch.onset.resize(kNumPitches, static_cast<Eigen::Index>(t) * b);
  batch.c_art.resize(static_cast<std::size_t>(t) * b);
  batch.c_dyn.resize(static_cast<std::size_t>(t) * b);
  for (int i = 0; i < b; ++i) {
    const auto& crop = crops[i];
    crop.check_aligned();
    if (crop.frames() != t) throw std::invalid_argument("make_batch: crops differ in length");
    for (int f = 0; f < t; ++f) {
      const Eigen::Index col = static_cast<Eigen::Index>(f) * b + i;
      batch.mel.col(col) = crop.mel.data.row(f).transpose().template cast<S>();
      batch.onset.col(col) = crop.onset.data.row(f).transpose().template cast<S>();
      batch.c_art[col] = crop.conditions.c_art[f];
      batch.c_dyn[col] = crop.conditions.c_dyn[f];
    }
  }
  return batch;
}

std::vector<CropPlan> plan_batch(std::span<const int> piece_frames, int window, int step,
                                 const TrainConfig& config) {
  const int pieces = static_cast<int>(piece_frames.size());
  if (pieces == 0) throw std::invalid_argument("plan_batch: no pieces");
  const int per_epoch = (pieces + config.batch_size - 1) / config.batch_size;
  const int epoch = step / per_epoch;
  const int within = step % per_epoch;

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x63726f70u};
  std::mt19937_64 rng(seq);
  std::vector<int> order(pieces);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> starts(pieces);
  for (int i = 0; i < pieces; ++i) {
    const int slack = piece_frames[order[i]] - window;
    if (slack < 0) throw std::invalid_argument("plan_batch: piece shorter than crop window");
    starts[i] = std::uniform_int_distribution<int>(0, slack)(rng);
  }
  std::vector<CropPlan> plan;
  for (int j = 0; j < config.batch_size; ++j) {
    const int slot = (within * config.batch_size + j) % pieces;
    plan.push_back({order[slot], starts[slot]});
  }
  return plan;
}

template <typename S>
double condition_accuracy(const LatentSequence<S>& z, std::span<const std::uint8_t> labels,
                          const MixturePrior<S>& prior) {
  if (z.cols() == 0) return 0.0;
  long hits = 0;
  for (Eigen::Index t = 0; t < z.cols(); ++t) {
    const auto r = responsibilities<S>(z.col(t), prior);
    const int predicted = r[1] > r[0] ? 1 : 0;
    hits += predicted == labels[t];
  }
  return static_cast<double>(hits) / z.cols();
}

StepMetrics train_step(TrainState& state, const SequenceBatch<float>& batch) {
  const TrainConfig& config = state.config;
  StepMetrics metrics;
  metrics.beta = kl_weight(state.step, config);
  LossWeights weights;
  weights.beta = metrics.beta;
  weights.lambda = config.lambda_ce;
  weights.ce_gradient_to_latent = config.ce_gradient_to_latent;

  auto rng = state.rng;
  const auto noise = LatentNoise<float>::draw(config.model.latent_dim, batch.columns(), rng);
  state.model.zero_grad();
  ForwardPass<float> pass;
  metrics.loss = state.model.loss_and_backward(batch, noise, weights, pass);
  if (!std::isfinite(metrics.loss.total)) throw NonFiniteLoss("total", "loss is not finite");

  auto params = state.model.parameters();
  metrics.grad_norm = clip_gradient_norm(params, config.grad_clip_norm);
  if (!std::isfinite(metrics.grad_norm)) throw NonFiniteLoss("gradient", "gradient norm is not finite");
  AdamOptions adam;
  adam.learning_rate = config.learning_rate;
  adam_update(params, state.optimizer, adam);
  state.rng = rng;
  ++state.step;

  metrics.step = state.step;
  metrics.accuracy_art = condition_accuracy<float>(pass.q_art.mean, batch.c_art, state.model.prior_art());
  metrics.accuracy_dyn = condition_accuracy<float>(pass.q_dyn.mean, batch.c_dyn, state.model.prior_dyn());
  return metrics;
}

EvalMetrics EvalMetrics::merged(const EvalMetrics& other) const {
  const long n = frames + other.frames;
  if (n == 0) return {};
  auto mix = [&](double a, double b) { return (a * frames + b * other.frames) / n; };
  return {mix(recon, other.recon),
          mix(kl_art, other.kl_art),
          mix(kl_dyn, other.kl_dyn),
          mix(accuracy_art, other.accuracy_art),
          mix(accuracy_dyn, other.accuracy_dyn),
          n};
}

EvalMetrics evaluate_piece(const GmvaeModel<float>& model, const PieceTensors& piece) {
  const std::array<PieceTensors, 1> one{piece};
  const auto batch = make_batch<float>(one);
  const auto q_art = model.encode(batch.mel, Factor::kArticulation);
  const auto q_dyn = model.encode(batch.mel, Factor::kDynamics);
  const Matrix<float> prediction = model.decode(batch.onset, q_art.mean, q_dyn.mean);
  const auto prior_art = model.prior_art();
  const auto prior_dyn = model.prior_dyn();
  ElboInputs<float> in{&batch.mel,     &prediction, &q_art,      &q_dyn,      &q_art.mean,
                       &q_dyn.mean,    batch.c_art, batch.c_dyn, &prior_art,  &prior_dyn};
  const auto loss = elbo_loss(in, LossWeights{});
  EvalMetrics m;
  m.recon = loss.recon;
  m.kl_art = loss.kl_art;
  m.kl_dyn = loss.kl_dyn;
  m.accuracy_art = condition_accuracy<float>(q_art.mean, batch.c_art, prior_art);
  m.accuracy_dyn = condition_accuracy<float>(q_dyn.mean, batch.c_dyn, prior_dyn);
  m.frames = batch.columns();
  return m;
}

EvalMetrics evaluate(const GmvaeModel<float>& model, std::span<const PieceTensors> pieces) {
  if (pieces.empty()) throw std::invalid_argument("evaluate: empty split");
  EvalMetrics total;
  for (const auto& piece : pieces) total = total.merged(evaluate_piece(model, piece));
  return total;
}

std::string metrics_row(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.6f,%.6f", m.step,
                static_cast<double>(m.loss.recon), static_cast<double>(m.loss.kl_art),
                static_cast<double>(m.loss.kl_dyn), static_cast<double>(m.loss.ce_art),
                static_cast<double>(m.loss.ce_dyn), m.accuracy_art, m.accuracy_dyn);
  return buf;
}

std::string eval_row(int step, const EvalMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.6f,%.6f,%ld", step, m.recon, m.kl_art,
                m.kl_dyn, m.accuracy_art, m.accuracy_dyn, m.frames);
  return buf;
}

namespace {

// On resume, rows past the checkpointed step (written before an interruption)
// are dropped so the file matches an uninterrupted run.
std::ofstream open_csv(const std::filesystem::path& path, const char* header, int resume_step) {
  std::vector<std::string> kept;
  if (resume_step > 0 && std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (!line.empty() && std::stol(line.substr(0, line.find(','))) <= resume_step) kept.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << header << '\n';
  for (const auto& line : kept) out << line << '\n';
  return out;
}

}  // namespace

void run_training(TrainState& state, std::span<const PieceTensors> train,
                  std::span<const PieceTensors> eval, const TrainingRun& run) {
  const int window = window_frames(state.config.crop_seconds, run.grid);
  std::vector<int> usable;
  std::vector<int> frames;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].frames() >= window) {
      usable.push_back(static_cast<int>(i));
      frames.push_back(train[i].frames());
    } else {
      std::cerr << "skipping training piece " << i << ": " << train[i].frames()
                << " frames is shorter than the " << window << "-frame crop\n";
    }
  }
  if (usable.empty()) throw std::runtime_error("no training piece is long enough for a crop");

  std::ofstream metrics;
  if (!run.metrics_csv.empty()) metrics = open_csv(run.metrics_csv, kMetricsHeader, state.step);
  std::ofstream eval_out;
  if (!run.eval_csv.empty() && !eval.empty()) eval_out = open_csv(run.eval_csv, kEvalHeader, state.step);

  while (state.step < state.config.max_steps) {
    const auto plan = plan_batch(frames, window, state.step, state.config);
    std::vector<PieceTensors> crops;
    crops.reserve(plan.size());
    for (const auto& p : plan) crops.push_back(crop_frames(train[usable[p.piece]], p.start_frame, window));
    const auto batch = make_batch<float>(crops);
    const StepMetrics m = train_step(state, batch);
    if (metrics.is_open()) metrics << metrics_row(m) << '\n' << std::flush;
    if (run.on_step) run.on_step(m);

    const bool last = state.step == state.config.max_steps;
    if (eval_out.is_open() && state.config.eval_every > 0 &&
        (state.step % state.config.eval_every == 0 || last)) {
      eval_out << eval_row(state.step, evaluate(state.model, eval)) << '\n' << std::flush;
    }
    if (!run.checkpoint_dir.empty()) {
      const bool periodic = state.config.checkpoint_every > 0 && state.step % state.config.checkpoint_every == 0;
      if (periodic) {
        save_checkpoint(state, run.checkpoint_dir / ("step_" + std::to_string(state.step) + ".npz"), run.grid);
      }
      if (last) save_checkpoint(state, run.checkpoint_dir / "final.npz", run.grid);
      if (periodic || last) save_checkpoint(state, run.checkpoint_dir / kLatestCheckpoint, run.grid);
    }
  }
}

template SequenceBatch<float> make_batch<float>(std::span<const PieceTensors>);
template SequenceBatch<double> make_batch<double>(std::span<const PieceTensors>);
template double condition_accuracy<float>(const LatentSequence<float>&, std::span<const std::uint8_t>,
                                          const MixturePrior<float>&);
template double condition_accuracy<double>(const LatentSequence<double>&, std::span<const std::uint8_t>,
                                           const MixturePrior<double>&);

}  // namespace pianogm
