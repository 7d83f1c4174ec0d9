// cslm/network.hpp

// Copyright 2026  The cslm-adapt Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Forward and backward passes over mini-batches. Activations are stored one
// example per column.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cslm/error.hpp"
#include "cslm/model.hpp"
#include "cslm/vocab.hpp"

namespace cslm {

// Scratch space reused across batches.
template <typename T>
struct Workspace {
  // acts[0] is the concatenated projection, acts[i + 1] the output of layer
  // i. The final entry holds probabilities.
  std::vector<Matrix<T>> acts;
  // Output logits shifted by their column max.
  Matrix<T> logits;
  // log of the softmax normalizer of the shifted logits, one per column.
  Eigen::Matrix<T, 1, Eigen::Dynamic> log_norm;
  Matrix<T> delta, delta_below;

  std::size_t batch() const { return acts.empty() ? 0 : static_cast<std::size_t>(acts[0].cols()); }

  T logprob(std::size_t b, WordId target) const {
    return logits(target, static_cast<Eigen::Index>(b)) - log_norm(static_cast<Eigen::Index>(b));
  }
};

namespace detail {

template <typename T>
void check_contexts(const Model<T>& model, std::span<const WordId> contexts, std::size_t batch) {
  const std::size_t c = static_cast<std::size_t>(model.context_size());
  if (contexts.size() != batch * c)
    throw InvalidArgument("forward: context length must equal order - 1");
  for (WordId w : contexts)
    if (w < 0 || w >= model.vocab_size()) throw InvalidArgument("forward: context id out of range");
}

template <typename T>
void apply_activation(Matrix<T>& m, Activation a) {
  if (a == Activation::kTanh) m.array() = m.array().tanh();
}

}  // namespace detail

// Runs `batch` contexts (flat, batch * (order - 1) ids) through the network.
template <typename T>
void forward(const Model<T>& model, std::span<const WordId> contexts, std::size_t batch,
             Workspace<T>& ws) {
  detail::check_contexts(model, contexts, batch);
  const auto& layers = model.layers();
  const Eigen::Index B = static_cast<Eigen::Index>(batch);
  const Eigen::Index dp = model.projection();
  const std::size_t c = static_cast<std::size_t>(model.context_size());

  ws.acts.resize(layers.size() + 1);
  Matrix<T>& x0 = ws.acts[0];
  x0.resize(static_cast<Eigen::Index>(c) * dp, B);
  const auto& emb = model.embedding();
  for (Eigen::Index b = 0; b < B; ++b)
    for (std::size_t j = 0; j < c; ++j)
      x0.block(static_cast<Eigen::Index>(j) * dp, b, dp, 1) =
          emb.col(contexts[static_cast<std::size_t>(b) * c + j]);

  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const bool last = i + 1 == layers.size();
    Matrix<T>& out = last ? ws.logits : ws.acts[i + 1];
    out.resize(l.out_dim(), B);
    out.noalias() = l.weight * ws.acts[i];
    out.colwise() += l.bias;
    if (!last) detail::apply_activation(out, l.activation);
  }

  // Numerically stable softmax.
  Matrix<T>& z = ws.logits;
  z.rowwise() -= z.colwise().maxCoeff();
  Matrix<T>& p = ws.acts.back();
  p.resize(z.rows(), z.cols());
  p.array() = z.array().exp();
  Eigen::Matrix<T, 1, Eigen::Dynamic> sums = p.colwise().sum();
  p.array().rowwise() /= sums.array();
  ws.log_norm = sums.array().log().matrix();
}

// Probability matrix, one row per example (batch x shortlist).
template <typename T>
Matrix<T> forward(const Model<T>& model, const NGramDataset& batch) {
  if (static_cast<int>(batch.context_size()) != model.context_size())
    throw InvalidArgument("forward: context length must equal order - 1");
  Workspace<T> ws;
  forward(model, batch.contexts(), batch.size(), ws);
  return ws.acts.back().transpose();
}

// Natural-log probability of one target given one context.
template <typename T>
T logprob(const Model<T>& model, std::span<const WordId> context, WordId target) {
  if (target < 0 || target >= model.shortlist())
    throw InvalidArgument("logprob: target outside the short-list");
  Workspace<T> ws;
  forward(model, context, 1, ws);
  return ws.logprob(0, target);
}

// Log probability of every example, in order. Batches of config batch size.
template <typename T>
std::vector<T> score_examples(const Model<T>& model, const NGramDataset& data) {
  if (!data.empty() && static_cast<int>(data.context_size()) != model.context_size())
    throw InvalidArgument("score: dataset order differs from model order");
  std::vector<T> out(data.size());
  Workspace<T> ws;
  const std::size_t bs = static_cast<std::size_t>(model.config().batch_size);
  const std::size_t c = data.context_size();
  for (std::size_t start = 0; start < data.size(); start += bs) {
    const std::size_t n = std::min(bs, data.size() - start);
    forward(model, data.contexts().subspan(start * c, n * c), n, ws);
    for (std::size_t b = 0; b < n; ++b) {
      WordId t = data.target(start + b);
      if (t < 0 || t >= model.shortlist())
        throw InvalidArgument("score: target outside the short-list");
      out[start + b] = ws.logprob(b, t);
    }
  }
  return out;
}

// Gradients of the mean batch cross-entropy. Entries of frozen layers are
// left empty.
template <typename T>
struct Gradients {
  Matrix<T> embedding;
  std::vector<Matrix<T>> weight;
  std::vector<Vector<T>> bias;
};

namespace detail {

template <typename T>
struct CollectSink {
  Gradients<T>& g;

  void layer(std::size_t i, const Matrix<T>& delta, const Matrix<T>& input) {
    g.weight[i].noalias() = delta * input.transpose();
    g.bias[i] = delta.rowwise().sum();
  }
  void embedding_column(WordId w, const auto& grad) { g.embedding.col(w) += grad; }
};

template <typename T>
struct SgdSink {
  Model<T>& model;
  T rate;

  void layer(std::size_t i, const Matrix<T>& delta, const Matrix<T>& input) {
    auto& l = model.layers()[i];
    l.weight.noalias() -= rate * (delta * input.transpose());
    l.bias.noalias() -= rate * delta.rowwise().sum();
  }
  void embedding_column(WordId w, const auto& grad) { model.embedding().col(w) -= rate * grad; }
};

// Backpropagates from the softmax output of the last forward() call.
// Gradients of each layer are handed to `sink` after the gradient flowing
// into the layer below has been computed, so the sink may update weights
// in place. Returns the mean negative log-likelihood of the batch.
template <typename T, typename Sink>
T backward(const Model<T>& model, Workspace<T>& ws, std::span<const WordId> contexts,
           std::span<const WordId> targets, Sink& sink) {
  const auto& layers = model.layers();
  const std::size_t B = targets.size();
  const T inv_b = T(1) / static_cast<T>(B);

  T nll = 0;
  for (std::size_t b = 0; b < B; ++b) nll -= ws.logprob(b, targets[b]);
  nll *= inv_b;

  // Lowest index that needs a gradient; -1 stands for the projection.
  long lowest = static_cast<long>(layers.size());
  if (model.embedding_trainable()) {
    lowest = -1;
  } else {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].trainable) {
        lowest = static_cast<long>(i);
        break;
      }
  }
  if (lowest == static_cast<long>(layers.size())) return nll;

  Matrix<T>& delta = ws.delta;
  delta = ws.acts.back();
  for (std::size_t b = 0; b < B; ++b) delta(targets[b], static_cast<Eigen::Index>(b)) -= T(1);
  delta *= inv_b;

  for (long i = static_cast<long>(layers.size()) - 1; i >= 0 && i >= lowest; --i) {
    const auto& l = layers[static_cast<std::size_t>(i)];
    const bool need_below = i > lowest;
    if (need_below) {
      ws.delta_below.noalias() = l.weight.transpose() * delta;
      if (i > 0) {
        const Activation below = layers[static_cast<std::size_t>(i - 1)].activation;
        if (below == Activation::kTanh)
          ws.delta_below.array() *= T(1) - ws.acts[static_cast<std::size_t>(i)].array().square();
      }
    }
    if (l.trainable) sink.layer(static_cast<std::size_t>(i), delta, ws.acts[static_cast<std::size_t>(i)]);
    if (!need_below) break;
    delta.swap(ws.delta_below);
  }

  if (lowest == -1) {
    // `delta` now holds the gradient w.r.t. the concatenated projection.
    const Eigen::Index dp = model.projection();
    const std::size_t c = static_cast<std::size_t>(model.context_size());
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < c; ++j)
        sink.embedding_column(contexts[b * c + j],
                              delta.block(static_cast<Eigen::Index>(j) * dp,
                                          static_cast<Eigen::Index>(b), dp, 1));
  }
  return nll;
}

template <typename T>
void check_batch(const Model<T>& model, const NGramDataset& batch) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  if (static_cast<int>(batch.context_size()) != model.context_size())
    throw InvalidArgument("batch order differs from model order");
  for (WordId t : batch.targets())
    if (t < 0 || t >= model.shortlist()) throw InvalidArgument("target outside the short-list");
}

}  // namespace detail

// Analytic gradients of the mean cross-entropy over `batch`, for trainable
// parameters only. Returns the loss through `nll` when given.
template <typename T>
Gradients<T> compute_gradients(const Model<T>& model, const NGramDataset& batch,
                               T* nll = nullptr) {
  detail::check_batch(model, batch);
  Gradients<T> g;
  g.weight.resize(model.num_layers());
  g.bias.resize(model.num_layers());
  if (model.embedding_trainable())
    g.embedding = Matrix<T>::Zero(model.embedding().rows(), model.embedding().cols());
  Workspace<T> ws;
  forward(model, batch.contexts(), batch.size(), ws);
  detail::CollectSink<T> sink{g};
  T loss = detail::backward(model, ws, batch.contexts(), batch.targets(), sink);
  if (nll) *nll = loss;
  return g;
}

// Mean cross-entropy of `batch` without touching the model.
template <typename T>
T batch_loss(const Model<T>& model, const NGramDataset& batch) {
  detail::check_batch(model, batch);
  Workspace<T> ws;
  forward(model, batch.contexts(), batch.size(), ws);
  T nll = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) nll -= ws.logprob(b, batch.target(b));
  return nll / static_cast<T>(batch.size());
}

// One SGD step on the mean cross-entropy of a batch given as flat spans.
// Frozen layers are never written. Returns the batch loss before the step.
template <typename T>
T sgd_step(Model<T>& model, std::span<const WordId> contexts, std::span<const WordId> targets,
           T rate, Workspace<T>& ws) {
  if (targets.empty()) throw InvalidArgument("sgd step: empty batch");
  if (!(rate > T(0))) throw InvalidArgument("sgd step: rate must be positive");
  forward(model, contexts, targets.size(), ws);
  detail::SgdSink<T> sink{model, rate};
  return detail::backward(model, ws, contexts, targets, sink);
}

template <typename T>
T backward_sgd_step(Model<T>& model, const NGramDataset& batch, T rate) {
  detail::check_batch(model, batch);
  Workspace<T> ws;
  return sgd_step(model, batch.contexts(), batch.targets(), rate, ws);
}

}  // namespace cslm
