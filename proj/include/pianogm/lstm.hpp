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

#include <random>
#include <string>
#include <vector>

#include "pianogm/gmvae.hpp"

namespace pianogm {

/// A named trainable tensor and its gradient accumulator.
template <typename S>
struct Parameter {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Matrix<S>::Zero(rows, cols)), grad(Matrix<S>::Zero(rows, cols)) {}
};

template <typename S>
using ParameterList = std::vector<Parameter<S>*>;

/// Fills with U(-bound, bound).
template <typename S>
void init_uniform(Matrix<S>& m, double bound, std::mt19937_64& rng);

/// y = W x + b, applied column-wise.
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out);

  void init(std::mt19937_64& rng);
  Matrix<S> forward(const Matrix<S>& x) const;
  /// Accumulates weight/bias gradients; returns dL/dx.
  Matrix<S> backward(const Matrix<S>& x, const Matrix<S>& dy);
  void collect(ParameterList<S>& out);

  int in_dim() const { return static_cast<int>(weight.value.cols()); }
  int out_dim() const { return static_cast<int>(weight.value.rows()); }

  Parameter<S> weight;
  Parameter<S> bias;
};

/// Activations kept for backpropagation. Gate rows are ordered
/// [input, forget, output, candidate], already activated.
template <typename S>
struct LstmCache {
  Matrix<S> gates;      // 4H x (T*B)
  Matrix<S> cell;       // H x (T*B)
  Matrix<S> cell_tanh;  // H x (T*B)
  Matrix<S> hidden;     // H x (T*B)
};

/// One LSTM direction over a batch of equal-length sequences. Sequences are
/// laid out time-major: column t * batch + b holds frame t of sequence b.
template <typename S>
class LstmDirection {
 public:
  LstmDirection() = default;
  LstmDirection(const std::string& name, int input, int hidden, bool reverse);

  void init(std::mt19937_64& rng);
  /// Returns the hidden states (H x T*B); fills `cache`.
  const Matrix<S>& forward(const Matrix<S>& x, int batch, LstmCache<S>& cache) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Matrix<S> backward(const Matrix<S>& x, int batch, const LstmCache<S>& cache,
                     const Matrix<S>& d_hidden);
  void collect(ParameterList<S>& out);

  int hidden_size() const { return hidden_; }

  Parameter<S> w_input;   // 4H x I
  Parameter<S> w_hidden;  // 4H x H
  Parameter<S> bias;      // 4H x 1

 private:
  int hidden_ = 0;
  bool reverse_ = false;
};

/// Stacked bidirectional LSTM; every layer emits [forward; backward] (2H rows).
template <typename S>
class BiLstm {
 public:
  struct Cache {
    std::vector<Matrix<S>> inputs;  // input of each layer
    std::vector<LstmCache<S>> forward;
    std::vector<LstmCache<S>> backward;
    Matrix<S> output;
  };

  BiLstm() = default;
  BiLstm(const std::string& name, int input, int hidden, int layers);

  void init(std::mt19937_64& rng);
  const Matrix<S>& forward(const Matrix<S>& x, int batch, Cache& cache) const;
  Matrix<S> backward(int batch, const Cache& cache, const Matrix<S>& d_output);
  void collect(ParameterList<S>& out);

  int output_dim() const { return 2 * hidden_; }

 private:
  int hidden_ = 0;
  std::vector<LstmDirection<S>> forward_;
  std::vector<LstmDirection<S>> backward_;
};

}  // namespace pianogm
