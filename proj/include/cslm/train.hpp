// cslm/train.hpp

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

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "cslm/error.hpp"
#include "cslm/model.hpp"
#include "cslm/network.hpp"
#include "cslm/vocab.hpp"

namespace cslm {

// Rate at epoch e (counted from the start of a run) is initial * decay^e.
struct LrSchedule {
  double initial = 0.06;
  double decay = 0.9;

  void validate() const {
    if (!(initial > 0.0) || !std::isfinite(initial))
      throw InvalidArgument("learning rate must be positive");
    if (!(decay > 0.0) || decay > 1.0) throw InvalidArgument("decay must be in (0, 1]");
  }

  double rate(std::uint64_t epoch) const {
    return initial * std::pow(decay, static_cast<double>(epoch));
  }
};

struct EpochStats {
  std::uint64_t epoch = 0;  // model epoch counter after this epoch
  double rate = 0.0;
  double mean_nll = 0.0;    // natural log
  std::size_t examples = 0;
  double seconds = 0.0;
};

struct TrainStats {
  std::vector<EpochStats> epochs;
};

// Derives an independent stream from a base seed and a tag tuple.
inline std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// One pass over `data` in the order given by `order`, mini-batches of the
// model's configured size. Returns the example-weighted mean NLL and bumps
// the model's epoch counter.
template <typename T>
double train_epoch(Model<T>& model, const NGramDataset& data, std::span<const std::size_t> order,
                   double rate) {
  if (data.empty()) throw InvalidArgument("train: empty example stream");
  if (static_cast<int>(data.context_size()) != model.context_size())
    throw InvalidArgument("train: dataset order differs from model order");
  const std::size_t bs = static_cast<std::size_t>(model.config().batch_size);
  const std::size_t c = data.context_size();
  std::vector<WordId> ctx;
  std::vector<WordId> tgt;
  ctx.reserve(bs * c);
  tgt.reserve(bs);
  Workspace<T> ws;
  long double total = 0;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t n = std::min(bs, order.size() - start);
    ctx.clear();
    tgt.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order[start + k];
      auto cx = data.context(i);
      ctx.insert(ctx.end(), cx.begin(), cx.end());
      const WordId t = data.target(i);
      if (t < 0 || t >= model.shortlist()) throw InvalidArgument("train: target outside the short-list");
      tgt.push_back(t);
    }
    const T loss = sgd_step(model, ctx, tgt, static_cast<T>(rate), ws);
    total += static_cast<long double>(loss) * static_cast<long double>(n);
  }
  model.set_epoch(model.epoch() + 1);
  return static_cast<double>(total / static_cast<long double>(order.size()));
}

// Trains for `epochs` passes, reshuffling every epoch from a stream derived
// from `seed` and the epoch index. `on_epoch` runs after each pass.
template <typename T>
TrainStats train(Model<T>& model, const NGramDataset& data, const LrSchedule& schedule, int epochs,
                 std::uint64_t seed,
                 const std::function<void(const EpochStats&)>& on_epoch = {}) {
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (data.empty()) throw InvalidArgument("train: empty example stream");
  schedule.validate();
  TrainStats stats;
  std::vector<std::size_t> order(data.size());
  for (int e = 0; e < epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = derive_rng(seed, 0x747261696eULL, static_cast<std::uint64_t>(e));
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats es;
    es.rate = schedule.rate(static_cast<std::uint64_t>(e));
    es.mean_nll = train_epoch(model, data, order, es.rate);
    es.epoch = model.epoch();
    es.examples = data.size();
    es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stats.epochs.push_back(es);
    if (on_epoch) on_epoch(es);
  }
  return stats;
}

struct PerplexityResult {
  double ppl = 0.0;
  double oos_fraction = 0.0;
  std::size_t scored = 0;  // examples entering the mean
  std::size_t oos = 0;     // examples with an <oos> target
  long double total_nll = 0;
};

// exp of the mean negative log-probability over examples whose target is
// not <oos>. Accumulated in extended precision.
template <typename T>
PerplexityResult perplexity(const Model<T>& model, const NGramDataset& data) {
  if (data.empty()) throw InvalidArgument("perplexity: no examples");
  const std::vector<T> lp = score_examples(model, data);
  PerplexityResult r;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.target(i) == Vocabulary::kOos) {
      ++r.oos;
      continue;
    }
    r.total_nll -= static_cast<long double>(lp[i]);
    ++r.scored;
  }
  if (r.scored == 0) throw InvalidArgument("perplexity: every target is out of the short-list");
  r.ppl = static_cast<double>(std::exp(r.total_nll / static_cast<long double>(r.scored)));
  r.oos_fraction = static_cast<double>(r.oos) / static_cast<double>(data.size());
  return r;
}

}  // namespace cslm
