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

#include "pianogm/lstm.hpp"

#include <cmath>

namespace pianogm {

template <typename S>
void init_uniform(Matrix<S>& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(dist(rng));
  }
}

template <typename S>
Linear<S>::Linear(const std::string& name, int in, int out)
    : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

template <typename S>
void Linear<S>::init(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  init_uniform(weight.value, bound, rng);
  init_uniform(bias.value, bound, rng);
}

template <typename S>
Matrix<S> Linear<S>::forward(const Matrix<S>& x) const {
  Matrix<S> y = weight.value * x;
  y.colwise() += bias.value.col(0);
  return y;
}

template <typename S>
Matrix<S> Linear<S>::backward(const Matrix<S>& x, const Matrix<S>& dy) {
  weight.grad.noalias() += dy * x.transpose();
  bias.grad.col(0) += dy.rowwise().sum();
  return weight.value.transpose() * dy;
}

template <typename S>
void Linear<S>::collect(ParameterList<S>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename S>
LstmDirection<S>::LstmDirection(const std::string& name, int input, int hidden, bool reverse)
    : w_input(name + ".w_input", 4 * hidden, input),
      w_hidden(name + ".w_hidden", 4 * hidden, hidden),
      bias(name + ".bias", 4 * hidden, 1),
      hidden_(hidden),
      reverse_(reverse) {}

template <typename S>
void LstmDirection<S>::init(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  init_uniform(w_input.value, bound, rng);
  init_uniform(w_hidden.value, bound, rng);
  init_uniform(bias.value, bound, rng);
  // Forget-gate bias starts at +1 so early gradients survive long sequences.
  bias.value.middleRows(hidden_, hidden_).array() += S(1);
}

template <typename S>
const Matrix<S>& LstmDirection<S>::forward(const Matrix<S>& x, int batch,
                                           LstmCache<S>& cache) const {
  const int h = hidden_;
  const int steps = static_cast<int>(x.cols() / batch);
  const Eigen::Index n = x.cols();

  cache.gates.noalias() = w_input.value * x;
  cache.gates.colwise() += bias.value.col(0);
  cache.cell.resize(h, n);
  cache.cell_tanh.resize(h, n);
  cache.hidden.resize(h, n);

  Matrix<S> h_prev = Matrix<S>::Zero(h, batch);
  Matrix<S> c_prev = Matrix<S>::Zero(h, batch);
  for (int s = 0; s < steps; ++s) {
    const int t = reverse_ ? steps - 1 - s : s;
    auto g = cache.gates.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
    g.noalias() += w_hidden.value * h_prev;
    g.topRows(3 * h) = g.topRows(3 * h).array().logistic();
    g.bottomRows(h) = g.bottomRows(h).array().tanh();

    auto c = cache.cell.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
    auto tc = cache.cell_tanh.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
    auto hh = cache.hidden.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
    c = g.middleRows(h, h).cwiseProduct(c_prev) + g.topRows(h).cwiseProduct(g.bottomRows(h));
    tc = c.array().tanh();
    hh = g.middleRows(2 * h, h).cwiseProduct(tc);
    h_prev = hh;
    c_prev = c;
  }
  return cache.hidden;
}

template <typename S>
Matrix<S> LstmDirection<S>::backward(const Matrix<S>& x, int batch, const LstmCache<S>& cache,
                                     const Matrix<S>& d_hidden) {
  const int h = hidden_;
  const int steps = static_cast<int>(x.cols() / batch);
  Matrix<S> d_gates(4 * h, x.cols());
  Matrix<S> dh_next = Matrix<S>::Zero(h, batch);
  Matrix<S> dc_next = Matrix<S>::Zero(h, batch);
  Matrix<S> dh(h, batch), dc(h, batch);

  for (int s = steps - 1; s >= 0; --s) {
    const int t = reverse_ ? steps - 1 - s : s;
    const Eigen::Index col = static_cast<Eigen::Index>(t) * batch;
    const auto g = cache.gates.middleCols(col, batch);
    const auto gi = g.topRows(h).array();
    const auto gf = g.middleRows(h, h).array();
    const auto go = g.middleRows(2 * h, h).array();
    const auto gc = g.bottomRows(h).array();
    const auto tc = cache.cell_tanh.middleCols(col, batch).array();

    dh = d_hidden.middleCols(col, batch) + dh_next;
    dc.array() = dh.array() * go * (S(1) - tc.square()) + dc_next.array();

    auto dg = d_gates.middleCols(col, batch);
    dg.topRows(h).array() = dc.array() * gc * gi * (S(1) - gi);
    if (s > 0) {
      const int t_prev = reverse_ ? t + 1 : t - 1;
      const auto c_prev = cache.cell.middleCols(static_cast<Eigen::Index>(t_prev) * batch, batch).array();
      dg.middleRows(h, h).array() = dc.array() * c_prev * gf * (S(1) - gf);
    } else {
      dg.middleRows(h, h).setZero();
    }
    dg.middleRows(2 * h, h).array() = dh.array() * tc * go * (S(1) - go);
    dg.bottomRows(h).array() = dc.array() * gi * (S(1) - gc.square());

    dc_next.array() = dc.array() * gf;
    dh_next.noalias() = w_hidden.value.transpose() * dg;
  }

  if (steps > 1) {
    const Eigen::Index tail = static_cast<Eigen::Index>(steps - 1) * batch;
    if (reverse_) {
      w_hidden.grad.noalias() += d_gates.leftCols(tail) * cache.hidden.rightCols(tail).transpose();
    } else {
      w_hidden.grad.noalias() += d_gates.rightCols(tail) * cache.hidden.leftCols(tail).transpose();
    }
  }
  w_input.grad.noalias() += d_gates * x.transpose();
  bias.grad.col(0) += d_gates.rowwise().sum();
  return w_input.value.transpose() * d_gates;
}

template <typename S>
void LstmDirection<S>::collect(ParameterList<S>& out) {
  out.push_back(&w_input);
  out.push_back(&w_hidden);
  out.push_back(&bias);
}

template <typename S>
BiLstm<S>::BiLstm(const std::string& name, int input, int hidden, int layers) : hidden_(hidden) {
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input : 2 * hidden;
    const std::string prefix = name + ".l" + std::to_string(l);
    forward_.emplace_back(prefix + ".fwd", in, hidden, false);
    backward_.emplace_back(prefix + ".bwd", in, hidden, true);
  }
}

template <typename S>
void BiLstm<S>::init(std::mt19937_64& rng) {
  for (std::size_t l = 0; l < forward_.size(); ++l) {
    forward_[l].init(rng);
    backward_[l].init(rng);
  }
}

template <typename S>
const Matrix<S>& BiLstm<S>::forward(const Matrix<S>& x, int batch, Cache& cache) const {
  const std::size_t layers = forward_.size();
  cache.inputs.resize(layers);
  cache.forward.resize(layers);
  cache.backward.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix<S>& in = l == 0 ? x : cache.inputs[l];
    if (l == 0) cache.inputs[0] = x;
    Matrix<S>& out = l + 1 < layers ? cache.inputs[l + 1] : cache.output;
    out.resize(2 * hidden_, x.cols());
    out.topRows(hidden_) = forward_[l].forward(in, batch, cache.forward[l]);
    out.bottomRows(hidden_) = backward_[l].forward(in, batch, cache.backward[l]);
  }
  return cache.output;
}

template <typename S>
Matrix<S> BiLstm<S>::backward(int batch, const Cache& cache, const Matrix<S>& d_output) {
  Matrix<S> grad = d_output;
  for (std::size_t l = forward_.size(); l-- > 0;) {
    const Matrix<S>& in = cache.inputs[l];
    Matrix<S> d_in = forward_[l].backward(in, batch, cache.forward[l], grad.topRows(hidden_));
    d_in += backward_[l].backward(in, batch, cache.backward[l], grad.bottomRows(hidden_));
    grad = std::move(d_in);
  }
  return grad;
}

template <typename S>
void BiLstm<S>::collect(ParameterList<S>& out) {
  for (std::size_t l = 0; l < forward_.size(); ++l) {
    forward_[l].collect(out);
    backward_[l].collect(out);
  }
}

template void init_uniform(Matrix<float>&, double, std::mt19937_64&);
template void init_uniform(Matrix<double>&, double, std::mt19937_64&);
template class Linear<float>;
template class Linear<double>;
template class LstmDirection<float>;
template class LstmDirection<double>;
template class BiLstm<float>;
template class BiLstm<double>;

}  // namespace pianogm
