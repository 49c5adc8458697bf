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

// pianogm: prepare data, train, and render with the conditional GM-VAE.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pianogm/checkpoint.hpp"
#include "pianogm/dataset.hpp"
#include "pianogm/figure.hpp"
#include "pianogm/npz.hpp"
#include "pianogm/piece_archive.hpp"
#include "pianogm/platform.hpp"
#include "pianogm/render.hpp"
#include "pianogm/trainer.hpp"
#include "pianogm/vocoder.hpp"
#include "pianogm/wav.hpp"

namespace fs = std::filesystem;
using namespace pianogm;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Common {
  std::string workdir = ".";
  std::uint64_t seed = 0;
};

struct RunRecord {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Resolved options (defaults < config file < flags) of the subcommand that ran.
void write_run_manifest(const fs::path& dir, const CLI::App& sub, const Common& common, const RunRecord& run) {
  nlohmann::ordered_json j;
  j["command"] = run.command;
  j["tool_version"] = kToolVersion;
  j["timestamp"] = utc_timestamp();
  j["seed"] = common.seed;
  j["workdir"] = common.workdir;
  j["config"] = sub.config_to_str(true, false);
  j["inputs"] = run.inputs;
  j["outputs"] = run.outputs;
  fs::create_directories(dir);
  write_text_atomically(dir / ("run_" + run.command + ".json"), j.dump(2) + "\n");
}

struct GridFlags {
  FrameGrid grid;
  void add(CLI::App* app) {
    app->add_option("--sample-rate", grid.sample_rate, "Audio sample rate (Hz)")->capture_default_str();
    app->add_option("--hop", grid.hop_length, "Hop length (samples)")->capture_default_str();
    app->add_option("--window", grid.window_length, "Analysis window (samples)")->capture_default_str();
    app->add_option("--fmin", grid.mel_fmin, "Lowest Mel edge (Hz)")->capture_default_str();
    app->add_option("--fmax", grid.mel_fmax, "Highest Mel edge (Hz)")->capture_default_str();
  }
};

void save_latents(const fs::path& path, const LatentSequence<float>& z_art, const LatentSequence<float>& z_dyn) {
  NpzArchive npz;
  auto put = [&](const std::string& name, const LatentSequence<float>& z) {
    // Stored T x D.
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = z.transpose();
    npz.put(name, NpyArray::from<float>(std::span(r.data(), static_cast<std::size_t>(r.size())),
                                        {static_cast<std::size_t>(r.rows()), static_cast<std::size_t>(r.cols())}));
  };
  put("z_art", z_art);
  put("z_dyn", z_dyn);
  npz.save(path);
}

LoadedCheckpoint load_model(const fs::path& path) {
  auto ckpt = load_checkpoint(path);
  if (ckpt.state.step == 0) std::cerr << "warning: checkpoint " << path << " is untrained (step 0)\n";
  return ckpt;
}

void check_grid(const LoadedCheckpoint& ckpt, const FrameGrid& grid, const std::string& what) {
  if (ckpt.grid && !(*ckpt.grid == grid)) {
    throw std::runtime_error(what + " was prepared on a different frame grid from the checkpoint's training data");
  }
}

// ---- prepare ----

struct PrepareOptions {
  GridFlags grid;
  int synthetic = 0;
  int synthetic_eval = 0;
  double piece_seconds = 30.0;
  std::string manifest;
  std::string source_root;
  std::string out = "data";
};

int run_prepare(const PrepareOptions& o, const Common& c, const CLI::App& sub) {
  const fs::path root = c.workdir;
  const fs::path out = root / o.out;
  o.grid.grid.validate();
  auto log = [](const DatasetEntry& e, const std::string& message) {
    if (message.empty()) {
      std::cout << summarize(e) << "\n";
    } else {
      std::cerr << e.piece << ": " << message << "\n";
    }
  };
  RunRecord run{"prepare", {}, {}};
  std::vector<DatasetEntry> entries;
  if (o.synthetic > 0) {
    SyntheticOptions s;
    s.train_pieces = o.synthetic;
    s.eval_pieces = o.synthetic_eval;
    s.piece_seconds = o.piece_seconds;
    s.seed = c.seed;
    entries = prepare_synthetic(out, s, o.grid.grid, log);
    run.inputs.push_back("synthetic:" + std::to_string(o.synthetic) + "+" + std::to_string(o.synthetic_eval));
  } else {
    const fs::path csv = root / o.manifest;
    const fs::path source_root = o.source_root.empty() ? csv.parent_path() : root / o.source_root;
    entries = prepare_sources(read_source_manifest(csv, source_root), out, o.grid.grid, log);
    run.inputs.push_back(csv.string());
  }
  for (const auto& e : entries) run.outputs.push_back((out / e.archive).string());
  run.outputs.push_back((out / kDatasetManifestName).string());
  write_run_manifest(out, sub, c, run);
  std::cout << "prepared " << entries.size() << " pieces in " << out.string() << "\n";
  return 0;
}

// ---- train ----

struct TrainOptions {
  TrainConfig config;
  std::string data = "data";
  std::string out = "run";
  std::string eval_split = "test";
  bool resume = false;
};

int run_train(TrainOptions o, const Common& c, const CLI::App& sub) {
  const fs::path root = c.workdir;
  const fs::path out = root / o.out;
  const fs::path ckpt_dir = out / "checkpoints";
  const Dataset train = load_dataset(root / o.data, "train");
  std::optional<Dataset> eval;
  try {
    eval = load_dataset(root / o.data, o.eval_split);
  } catch (const std::exception& e) {
    std::cerr << "no evaluation split: " << e.what() << "\n";
  }

  o.config.seed = c.seed;
  std::optional<TrainState> state;
  if (o.resume) {
    auto ckpt = load_checkpoint(ckpt_dir / kLatestCheckpoint);
    check_grid(ckpt, train.grid, "training data");
    // Only run-length settings may change when resuming.
    ckpt.state.config.max_steps = o.config.max_steps;
    ckpt.state.config.eval_every = o.config.eval_every;
    ckpt.state.config.checkpoint_every = o.config.checkpoint_every;
    ckpt.state.config.validate();
    state = std::move(ckpt.state);
    std::cout << "resuming at step " << state->step << "\n";
  } else {
    state = init_train_state(o.config, train.pieces);
  }

  TrainingRun run;
  run.grid = train.grid;
  run.metrics_csv = out / "metrics.csv";
  if (eval) run.eval_csv = out / "eval.csv";
  run.checkpoint_dir = ckpt_dir;
  const int total = state->config.max_steps;
  run.on_step = [total](const StepMetrics& m) {
    if (m.step == 1 || m.step % 50 == 0 || m.step == total) {
      std::cout << "step " << m.step << "/" << total << " recon=" << m.loss.recon << " kl=" << m.loss.kl_art
                << "/" << m.loss.kl_dyn << " acc=" << m.accuracy_art << "/" << m.accuracy_dyn << "\n"
                << std::flush;
    }
  };
  fs::create_directories(out);
  const std::span<const PieceTensors> eval_pieces =
      eval ? std::span<const PieceTensors>(eval->pieces) : std::span<const PieceTensors>();
  try {
    run_training(*state, train.pieces, eval_pieces, run);
  } catch (const NonFiniteLoss& e) {
    std::cerr << "training stopped at step " << state->step + 1 << ": " << e.what() << "\n";
    return 3;
  }
  write_run_manifest(out, sub, c,
                     {"train",
                      {(root / o.data).string()},
                      {run.metrics_csv.string(), (ckpt_dir / "final.npz").string()}});
  std::cout << "final checkpoint: " << (ckpt_dir / "final.npz").string() << "\n";
  return 0;
}

// ---- morph ----

struct MorphOptions {
  std::string checkpoint;
  std::string piece;
  std::string factor;
  int from = -1;
  int to = -1;
  int other = 1;
  bool all_scenarios = false;
  int iterations = kDefaultGriffinLimIterations;
  std::string out = "morph";
};

std::string scenario_name(const MorphSpec& s) {
  const std::string moving = factor_name(s.factor);
  const std::string held = s.factor == Factor::kArticulation ? "dyn" : "art";
  return moving + "_" + std::to_string(s.from_component) + "to" + std::to_string(s.to_component) + "_" + held +
         std::to_string(s.other_component);
}

int run_morph(const MorphOptions& o, const Common& c, const CLI::App& sub) {
  const fs::path root = c.workdir;
  const fs::path out = root / o.out;
  std::vector<MorphSpec> specs;
  if (o.all_scenarios) {
    for (Factor f : {Factor::kArticulation, Factor::kDynamics}) {
      for (int held : {0, 1}) specs.push_back({f, 0, 1, held, std::nullopt});
    }
  } else {
    if (o.factor.empty() || o.from < 0 || o.to < 0) {
      throw CLI::ValidationError("morph", "--factor, --from and --to are required without --all-scenarios");
    }
    MorphSpec s{parse_factor(o.factor), o.from, o.to, o.other, std::nullopt};
    s.validate();
    specs.push_back(s);
  }
  const auto ckpt = load_model(root / o.checkpoint);
  const auto piece = load_piece(root / o.piece);
  check_grid(ckpt, piece.grid, "piece");
  const auto& model = ckpt.state.model;
  const int frames = piece.tensors.frames();

  fs::create_directories(out);
  RunRecord run{"morph", {(root / o.checkpoint).string(), (root / o.piece).string()}, {}};
  std::vector<MelSpectrogram> panels;
  std::vector<std::string> labels;
  for (const auto& spec : specs) {
    const auto [z_art, z_dyn] = morph_pair(model, spec, frames);
    const MelSpectrogram mel = synthesize(model, piece.tensors.onset, z_art, z_dyn);
    const std::string name = scenario_name(spec);
    const auto audio = mel_to_audio(mel, piece.grid, o.iterations);
    write_wav_pcm16(out / (name + ".wav"), audio, piece.grid.sample_rate);
    emit_figure({mel}, {name}, out / (name + ".png"));
    save_latents(out / (name + "_latents.npz"), z_art, z_dyn);
    for (const char* ext : {".wav", ".png", "_latents.npz"}) run.outputs.push_back((out / (name + ext)).string());
    panels.push_back(mel);
    labels.push_back(name);
    std::cout << "rendered " << name << "\n";
  }
  if (o.all_scenarios) {
    emit_figure(panels, labels, out / "morph_grid.png");
    run.outputs.push_back((out / "morph_grid.png").string());
  }
  write_run_manifest(out, sub, c, run);
  return 0;
}

// ---- transfer ----

struct TransferOptions {
  std::string checkpoint;
  std::string content;
  std::string style;
  std::string mode = "mean";
  int iterations = kDefaultGriffinLimIterations;
  std::string out = "transfer";
};

int run_transfer(const TransferOptions& o, const Common& c, const CLI::App& sub) {
  const fs::path root = c.workdir;
  const fs::path out = root / o.out;
  const auto ckpt = load_model(root / o.checkpoint);
  const auto content = load_piece(root / o.content);
  const auto style = load_piece(root / o.style);
  check_grid(ckpt, content.grid, "content piece");
  check_grid(ckpt, style.grid, "style piece");
  if (!(content.grid == style.grid)) throw std::runtime_error("content and style pieces use different frame grids");
  const auto& model = ckpt.state.model;

  const auto inferred =
      infer_style(model, style.tensors.mel, o.mode == "sample" ? StyleMode::kSample : StyleMode::kMean, c.seed);
  const int frames = content.tensors.frames();
  const auto z_art = align_latents(inferred.z_art, frames);
  const auto z_dyn = align_latents(inferred.z_dyn, frames);
  const MelSpectrogram mel = synthesize(model, content.tensors.onset, z_art, z_dyn);

  fs::create_directories(out);
  write_wav_pcm16(out / "transfer.wav", mel_to_audio(mel, content.grid, o.iterations), content.grid.sample_rate);
  emit_figure({style.tensors.mel, content.tensors.mel, mel}, {"style", "content", "output"}, out / "transfer.png");
  save_latents(out / "transfer_latents.npz", z_art, z_dyn);
  std::cout << "style frames " << inferred.length << " -> content frames " << frames << "\n";
  std::cout << "reconstruction error vs content: " << reconstruction_error(content.tensors.mel, mel) << "\n";
  write_run_manifest(out, sub, c,
                     {"transfer",
                      {(root / o.checkpoint).string(), (root / o.content).string(), (root / o.style).string()},
                      {(out / "transfer.wav").string(), (out / "transfer.png").string(),
                       (out / "transfer_latents.npz").string()}});
  return 0;
}

// ---- eval ----

struct EvalOptions {
  std::string checkpoint;
  std::string data = "data";
  std::string split = "test";
  std::string out = "eval";
};

int run_eval(const EvalOptions& o, const Common& c, const CLI::App& sub) {
  const fs::path root = c.workdir;
  const fs::path out = root / o.out;
  const auto ckpt = load_model(root / o.checkpoint);
  const Dataset data = load_dataset(root / o.data, o.split);
  check_grid(ckpt, data.grid, "evaluation data");
  const EvalMetrics m = evaluate(ckpt.state.model, data.pieces);
  const std::string report = std::string(kEvalHeader) + "\n" + eval_row(ckpt.state.step, m) + "\n";
  fs::create_directories(out);
  const fs::path csv = out / ("eval_" + o.split + ".csv");
  write_text_atomically(csv, report);
  std::cout << report;
  write_run_manifest(out, sub, c, {"eval", {(root / o.checkpoint).string(), (root / o.data).string()}, {csv.string()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  pianogm::tune_allocator();
  CLI::App app{"Conditional GM-VAE for expressive piano rendering"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override its values");
  Common common;
  app.add_option("--workdir", common.workdir, "Base directory for every relative path")->capture_default_str();
  app.add_option("--seed", common.seed, "Random seed")->capture_default_str();

  PrepareOptions prep;
  auto* prepare = app.add_subcommand("prepare", "Build piece archives from MIDI/audio pairs or a synthetic corpus");
  prep.grid.add(prepare);
  auto* synth = prepare->add_option("--synthetic", prep.synthetic, "Number of synthetic training pieces");
  prepare->add_option("--synthetic-eval", prep.synthetic_eval, "Number of held-out synthetic pieces")
      ->capture_default_str();
  prepare->add_option("--piece-seconds", prep.piece_seconds, "Synthetic piece length")->capture_default_str();
  auto* manifest = prepare->add_option("--manifest", prep.manifest, "CSV of midi/audio/split columns");
  prepare->add_option("--source-root", prep.source_root, "Root for relative manifest paths");
  prepare->add_option("--out", prep.out, "Output dataset directory")->capture_default_str();
  synth->excludes(manifest);

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train a model on a prepared dataset");
  train->add_option("--data", tr.data, "Prepared dataset directory")->capture_default_str();
  train->add_option("--out", tr.out, "Run directory")->capture_default_str();
  train->add_option("--eval-split", tr.eval_split, "Split evaluated during training")->capture_default_str();
  train->add_flag("--resume", tr.resume, "Continue from <out>/checkpoints/latest.npz");
  train->add_option("--max-steps", tr.config.max_steps, "Total optimiser steps")->capture_default_str();
  train->add_option("--batch-size", tr.config.batch_size, "Crops per step")->capture_default_str();
  train->add_option("--lr", tr.config.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--crop-seconds", tr.config.crop_seconds, "Training crop length")->capture_default_str();
  train->add_option("--kl-warmup", tr.config.kl_warmup_fraction, "Fraction of steps for the KL ramp")
      ->capture_default_str();
  train->add_option("--lambda-ce", tr.config.lambda_ce, "Auxiliary cross-entropy weight")->capture_default_str();
  train->add_option("--grad-clip", tr.config.grad_clip_norm, "Global gradient-norm clip")->capture_default_str();
  train->add_option("--ce-to-latent", tr.config.ce_gradient_to_latent,
                    "Backpropagate the cross-entropy term into the encoders")
      ->capture_default_str();
  train->add_option("--eval-every", tr.config.eval_every, "Steps between evaluations (0: off)")
      ->capture_default_str();
  train->add_option("--checkpoint-every", tr.config.checkpoint_every, "Steps between checkpoints (0: final only)")
      ->capture_default_str();
  train->add_option("--latent-dim", tr.config.model.latent_dim, "Latent dimension per factor")
      ->capture_default_str();
  train->add_option("--encoder-hidden", tr.config.model.encoder_hidden, "Encoder LSTM width")
      ->capture_default_str();
  train->add_option("--decoder-hidden", tr.config.model.decoder_hidden, "Decoder LSTM width")
      ->capture_default_str();
  train->add_option("--layers", tr.config.model.num_layers, "Stacked LSTM layers")->capture_default_str();

  MorphOptions mo;
  auto* morph = app.add_subcommand("morph", "Render a piece while one factor moves between components");
  morph->add_option("--checkpoint", mo.checkpoint, "Checkpoint (.npz)")->required();
  morph->add_option("--piece", mo.piece, "Piece archive supplying the onset roll")->required();
  morph->add_option("--factor", mo.factor, "art or dyn")->check(CLI::IsMember({"art", "dyn", "articulation", "dynamics"}));
  morph->add_option("--from", mo.from, "Start component")->check(CLI::Range(0, 1));
  morph->add_option("--to", mo.to, "End component")->check(CLI::Range(0, 1));
  morph->add_option("--other", mo.other, "Component held by the other factor")->check(CLI::Range(0, 1))
      ->capture_default_str();
  morph->add_flag("--all-scenarios", mo.all_scenarios, "Both factors, other factor held at each component");
  morph->add_option("--iterations", mo.iterations, "Phase reconstruction iterations")->check(CLI::PositiveNumber)
      ->capture_default_str();
  morph->add_option("--out", mo.out, "Output directory")->capture_default_str();

  TransferOptions to;
  auto* transfer = app.add_subcommand("transfer", "Render one piece's notes in another piece's style");
  transfer->add_option("--checkpoint", to.checkpoint, "Checkpoint (.npz)")->required();
  transfer->add_option("--content", to.content, "Piece archive supplying the onset roll")->required();
  transfer->add_option("--style", to.style, "Piece archive supplying the style")->required();
  transfer->add_option("--mode", to.mode, "mean or sample")->check(CLI::IsMember({"mean", "sample"}))
      ->capture_default_str();
  transfer->add_option("--iterations", to.iterations, "Phase reconstruction iterations")
      ->check(CLI::PositiveNumber)->capture_default_str();
  transfer->add_option("--out", to.out, "Output directory")->capture_default_str();

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint (.npz)")->required();
  eval->add_option("--data", ev.data, "Prepared dataset directory")->capture_default_str();
  eval->add_option("--split", ev.split, "Split to evaluate")->capture_default_str();
  eval->add_option("--out", ev.out, "Report directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) {
      if (prep.synthetic <= 0 && prep.manifest.empty()) {
        throw CLI::ValidationError("prepare", "give --synthetic N or --manifest CSV");
      }
      return run_prepare(prep, common, *prepare);
    }
    if (train->parsed()) return run_train(tr, common, *train);
    if (morph->parsed()) return run_morph(mo, common, *morph);
    if (transfer->parsed()) return run_transfer(to, common, *transfer);
    if (eval->parsed()) return run_eval(ev, common, *eval);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
