// cslm/model.hpp

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

// Feedforward n-gram network: a shared word projection, a stack of dense
// hidden layers and a short-list softmax output layer.
//
//   context words w_1 .. w_{n-1}
//     -> [E w_1; ...; E w_{n-1}]          (n-1)*projection inputs
//     -> hidden layers (tanh or linear)
//     -> softmax over the short-list      shortlist outputs

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cslm/error.hpp"

namespace cslm {

enum class Activation : std::uint8_t { kLinear = 0, kTanh = 1, kSoftmax = 2 };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kTanh: return "tanh";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "linear") return Activation::kLinear;
  if (s == "tanh") return Activation::kTanh;
  if (s == "softmax") return Activation::kSoftmax;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

struct NetworkConfig {
  int order = 28;
  int projection = 320;
  std::vector<int> hidden = {1024, 1024, 1024};
  // One entry per hidden layer; empty means all tanh.
  std::vector<Activation> activations;
  int shortlist = 32000;
  int vocab_size = 32000;
  int batch_size = 128;
  std::uint64_t seed = 1;

  int context_size() const { return order - 1; }
  int input_dim() const { return context_size() * projection; }

  Activation hidden_activation(std::size_t i) const {
    return activations.empty() ? Activation::kTanh : activations.at(i);
  }

  void validate() const {
    if (order < 2) throw InvalidArgument("config: order must be >= 2");
    if (projection < 1) throw InvalidArgument("config: projection dimension must be >= 1");
    if (shortlist < 1) throw InvalidArgument("config: shortlist size must be >= 1");
    if (vocab_size < 1) throw InvalidArgument("config: vocabulary size must be >= 1");
    if (shortlist > vocab_size) throw InvalidArgument("config: shortlist larger than vocabulary");
    if (batch_size < 1) throw InvalidArgument("config: batch size must be >= 1");
    for (int h : hidden)
      if (h < 1) throw InvalidArgument("config: hidden layer sizes must be >= 1");
    if (!activations.empty() && activations.size() != hidden.size())
      throw InvalidArgument("config: one activation per hidden layer required");
    for (Activation a : activations)
      if (a == Activation::kSoftmax)
        throw InvalidArgument("config: softmax is only legal as the output layer");
  }
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct Layer {
  Matrix<T> weight;  // out x in
  Vector<T> bias;    // out
  Activation activation = Activation::kTanh;
  bool trainable = true;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  friend bool operator==(const Layer& a, const Layer& b) {
    return a.activation == b.activation && a.trainable == b.trainable &&
           a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.weight == b.weight && a.bias == b.bias;
  }
};

template <typename T>
class Model {
 public:
  using Scalar = T;

  Model() = default;

  const NetworkConfig& config() const { return config_; }

  int order() const { return config_.order; }
  int context_size() const { return config_.context_size(); }
  int projection() const { return config_.projection; }
  int vocab_size() const { return config_.vocab_size; }
  int shortlist() const { return config_.shortlist; }

  // Column w is the projection of word w (projection x vocab_size), i.e. a
  // vocab_size x projection table in row-major order.
  Matrix<T>& embedding() { return embedding_; }
  const Matrix<T>& embedding() const { return embedding_; }
  bool embedding_trainable() const { return embedding_trainable_; }
  void set_embedding_trainable(bool t) { embedding_trainable_ = t; }

  std::vector<Layer<T>>& layers() { return layers_; }
  const std::vector<Layer<T>>& layers() const { return layers_; }
  std::size_t num_layers() const { return layers_.size(); }

  std::uint64_t epoch() const { return epoch_; }
  void set_epoch(std::uint64_t e) { epoch_ = e; }

  void set_all_trainable(bool t) {
    embedding_trainable_ = t;
    for (auto& l : layers_) l.trainable = t;
  }

  bool any_trainable() const {
    if (embedding_trainable_) return true;
    for (const auto& l : layers_)
      if (l.trainable) return true;
    return false;
  }

  // Dimension of the activation entering layer `i` (i == num_layers() gives
  // the output dimension).
  int dim_before(std::size_t i) const {
    return i == 0 ? config_.input_dim() : layers_.at(i - 1).out_dim();
  }

  // Number of trainable scalars.
  std::size_t parameter_count() const {
    std::size_t n = static_cast<std::size_t>(embedding_.size());
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  // Checks the layer chain against the config; throws DimensionError.
  void check_consistency() const {
    if (embedding_.rows() != config_.projection || embedding_.cols() != config_.vocab_size)
      throw DimensionError("model: embedding table shape disagrees with config");
    if (layers_.empty()) throw DimensionError("model: no output layer");
    int dim = config_.input_dim();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.in_dim() != dim) throw DimensionError("model: layer " + std::to_string(i) +
                                                  " input dimension mismatch");
      if (l.bias.size() != l.weight.rows())
        throw DimensionError("model: layer " + std::to_string(i) + " bias size mismatch");
      const bool last = i + 1 == layers_.size();
      if (last != (l.activation == Activation::kSoftmax))
        throw DimensionError("model: softmax must be exactly the final layer");
      dim = l.out_dim();
    }
    if (dim != config_.shortlist) throw DimensionError("model: output size != shortlist size");
  }

  // Keeps config().hidden/activations in step with the layer list after
  // structural edits.
  void sync_config() {
    config_.hidden.clear();
    config_.activations.clear();
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
      config_.hidden.push_back(layers_[i].out_dim());
      config_.activations.push_back(layers_[i].activation);
    }
  }

  friend bool operator==(const Model& a, const Model& b) {
    return a.epoch_ == b.epoch_ && a.embedding_trainable_ == b.embedding_trainable_ &&
           a.embedding_.rows() == b.embedding_.rows() &&
           a.embedding_.cols() == b.embedding_.cols() && a.embedding_ == b.embedding_ &&
           a.layers_ == b.layers_;
  }

 private:
  template <typename U>
  friend Model<U> init_network(const NetworkConfig& config);
  template <typename U>
  friend class ModelBuilder;

  NetworkConfig config_;
  Matrix<T> embedding_;
  bool embedding_trainable_ = true;
  std::vector<Layer<T>> layers_;
  std::uint64_t epoch_ = 0;
};

// Assembles a model from explicit parts; used by deserialization and tests.
template <typename T>
class ModelBuilder {
 public:
  static Model<T> assemble(NetworkConfig config, Matrix<T> embedding, bool embedding_trainable,
                           std::vector<Layer<T>> layers, std::uint64_t epoch) {
    Model<T> m;
    m.config_ = std::move(config);
    m.embedding_ = std::move(embedding);
    m.embedding_trainable_ = embedding_trainable;
    m.layers_ = std::move(layers);
    m.epoch_ = epoch;
    m.sync_config();
    m.check_consistency();
    return m;
  }
};

namespace detail {

template <typename T>
void fill_uniform(Matrix<T>& m, T limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(limit),
                                              static_cast<double>(limit));
  // Column-major fill order; changing it changes every seeded model.
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(dist(rng));
}

}  // namespace detail

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero, every
// layer trainable. Deterministic in config.seed.
template <typename T>
Model<T> init_network(const NetworkConfig& config) {
  config.validate();
  Model<T> m;
  m.config_ = config;
  std::mt19937_64 rng(config.seed);

  m.embedding_.resize(config.projection, config.vocab_size);
  detail::fill_uniform(m.embedding_,
                       static_cast<T>(std::sqrt(6.0 / (config.projection + config.vocab_size))),
                       rng);

  int in = config.input_dim();
  auto add = [&](int out, Activation act) {
    Layer<T> l;
    l.weight.resize(out, in);
    detail::fill_uniform(l.weight, static_cast<T>(std::sqrt(6.0 / (in + out))), rng);
    l.bias = Vector<T>::Zero(out);
    l.activation = act;
    m.layers_.push_back(std::move(l));
    in = out;
  };
  for (std::size_t i = 0; i < config.hidden.size(); ++i)
    add(config.hidden[i], config.hidden_activation(i));
  add(config.shortlist, Activation::kSoftmax);
  m.sync_config();
  return m;
}

// Converts between scalar types (e.g. a float model to double for
// gradient checking).
template <typename To, typename From>
Model<To> model_cast(const Model<From>& src) {
  std::vector<Layer<To>> layers;
  for (const auto& l : src.layers()) {
    Layer<To> c;
    c.weight = l.weight.template cast<To>();
    c.bias = l.bias.template cast<To>();
    c.activation = l.activation;
    c.trainable = l.trainable;
    layers.push_back(std::move(c));
  }
  return ModelBuilder<To>::assemble(src.config(), src.embedding().template cast<To>(),
                                    src.embedding_trainable(), std::move(layers), src.epoch());
}

}  // namespace cslm
