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

#include "pianogm/checkpoint.hpp"

#include <sstream>
#include <stdexcept>

#include "pianogm/npz.hpp"

namespace pianogm {
namespace {

using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

NpyArray matrix_array(const Matrix<float>& m) {
  const RowMajor r = m;
  return NpyArray::from<float>(std::span(r.data(), static_cast<std::size_t>(r.size())),
                               {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
}

NpyArray vector_array(const Vector<float>& v) {
  return NpyArray::from<float>(std::span(v.data(), static_cast<std::size_t>(v.size())),
                               {static_cast<std::size_t>(v.size())});
}

NpyArray scalar_array(std::int64_t v) { return NpyArray::from<std::int64_t>(std::span(&v, 1), {}); }

void read_matrix(const NpzArchive& npz, const std::string& key, Matrix<float>& out) {
  if (!npz.contains(key)) throw std::runtime_error("checkpoint: missing " + key);
  const auto& a = npz.at(key);
  if (a.shape.size() != 2 || a.shape[0] != static_cast<std::size_t>(out.rows()) ||
      a.shape[1] != static_cast<std::size_t>(out.cols())) {
    throw std::runtime_error("checkpoint: " + key + " has the wrong shape for this model config");
  }
  const auto v = a.values<float>();
  out = Eigen::Map<const RowMajor>(v.data(), out.rows(), out.cols());
}

Vector<float> read_vector(const NpzArchive& npz, const std::string& key, Eigen::Index n) {
  if (!npz.contains(key)) throw std::runtime_error("checkpoint: missing " + key);
  const auto v = npz.at(key).values<float>();
  if (static_cast<Eigen::Index>(v.size()) != n) throw std::runtime_error("checkpoint: " + key + " has the wrong size");
  return Eigen::Map<const Vector<float>>(v.data(), n);
}

std::int64_t read_scalar(const NpzArchive& npz, const std::string& key) {
  if (!npz.contains(key)) throw std::runtime_error("checkpoint: missing " + key);
  const auto v = npz.at(key).values<std::int64_t>();
  if (v.size() != 1) throw std::runtime_error("checkpoint: " + key + " is not a scalar");
  return v[0];
}

}  // namespace

std::filesystem::path checkpoint_sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p.replace_extension(".config.json");
  return p;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path,
                     const std::optional<FrameGrid>& grid) {
  NpzArchive npz;
  npz.put("format", NpyArray::from_text(kCheckpointFormat));
  npz.put("version", scalar_array(kCheckpointVersion));
  npz.put("config", NpyArray::from_text(state.config.to_json()));
  if (grid) npz.put("grid", NpyArray::from_text(grid->to_json()));
  npz.put("step", scalar_array(state.step));
  npz.put("adam_step", scalar_array(state.optimizer.updates));
  std::ostringstream rng;
  rng << state.rng;
  npz.put("rng", NpyArray::from_text(rng.str()));
  npz.put("feature_mean", vector_array(state.model.feature_mean()));
  npz.put("feature_scale", vector_array(state.model.feature_scale()));

  const auto params = state.model.parameters();
  const bool has_moments = state.optimizer.first.size() == params.size();
  for (std::size_t i = 0; i < params.size(); ++i) {
    npz.put("param/" + params[i]->name, matrix_array(params[i]->value));
    if (has_moments) {
      npz.put("adam_m/" + params[i]->name, matrix_array(state.optimizer.first[i]));
      npz.put("adam_v/" + params[i]->name, matrix_array(state.optimizer.second[i]));
    }
  }
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  npz.save(path);
  write_text_atomically(checkpoint_sidecar_path(path), state.config.to_json() + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  NpzArchive npz;
  try {
    npz = NpzArchive::load(path);
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() + " is unreadable: " + e.what());
  }
  if (!npz.contains("format") || npz.at("format").text() != kCheckpointFormat) {
    throw std::runtime_error(path.string() + " is not a pianogm checkpoint");
  }
  const auto version = read_scalar(npz, "version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kCheckpointVersion) + ")");
  }
  if (!npz.contains("config")) throw std::runtime_error("checkpoint: missing config");
  const TrainConfig config = TrainConfig::from_json(npz.at("config").text());

  TrainState state{config, GmvaeModel<float>(config.model), {}, 0, {}};
  auto params = state.model.parameters();
  const bool has_moments = npz.contains("adam_m/" + params.front()->name);
  for (auto* p : params) {
    read_matrix(npz, "param/" + p->name, p->value);
    if (has_moments) {
      Matrix<float> m(p->value.rows(), p->value.cols()), v(p->value.rows(), p->value.cols());
      read_matrix(npz, "adam_m/" + p->name, m);
      read_matrix(npz, "adam_v/" + p->name, v);
      state.optimizer.first.push_back(std::move(m));
      state.optimizer.second.push_back(std::move(v));
    }
  }
  state.model.set_feature_normalization(read_vector(npz, "feature_mean", kNumMels),
                                        read_vector(npz, "feature_scale", kNumMels));
  state.step = static_cast<int>(read_scalar(npz, "step"));
  state.optimizer.updates = read_scalar(npz, "adam_step");
  if (!npz.contains("rng")) throw std::runtime_error("checkpoint: missing rng");
  std::istringstream rng(npz.at("rng").text());
  rng >> state.rng;
  if (!rng) throw std::runtime_error("checkpoint: corrupt rng state");

  LoadedCheckpoint out{std::move(state), std::nullopt};
  if (npz.contains("grid")) out.grid = FrameGrid::from_json(npz.at("grid").text());
  return out;
}

}  // namespace pianogm
