// cslm/tune.hpp

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

// Log-linear weight tuning by coordinate ascent on corpus BLEU of the
// reranked dev n-best list. Each coordinate is searched over a fixed grid;
// the first start is the all-ones vector, further starts are seeded random.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "cslm/bleu.hpp"
#include "cslm/error.hpp"
#include "cslm/nbest.hpp"

namespace cslm {

struct TuneOptions {
  int restarts = 5;  // random starts in addition to all-ones
  int max_passes = 20;
  std::uint64_t seed = 1;
  int max_order = kBleuMaxOrder;
  bool smooth = false;
  std::vector<double> grid = default_grid();

  static std::vector<double> default_grid() {
    std::vector<double> g;
    for (int i = -20; i <= 20; ++i) g.push_back(i / 20.0);
    return g;
  }
};

struct TuneResult {
  FeatureWeights weights;
  double bleu = 0.0;
  double baseline_bleu = 0.0;  // all-ones weights
};

// Precomputed per-hypothesis BLEU statistics of a dev list.
class RerankEvaluator {
 public:
  RerankEvaluator(const NBestList& dev, std::span<const std::vector<Sentence>> references,
                  int max_order = kBleuMaxOrder, bool smooth = false)
      : dev_(dev), smooth_(smooth), max_order_(max_order) {
    if (dev.groups.empty()) throw InvalidArgument("tune: empty dev set");
    if (references.size() != dev.groups.size())
      throw InvalidArgument("tune: need references for every source sentence");
    stats_.resize(dev.groups.size());
    for (std::size_t g = 0; g < dev.groups.size(); ++g)
      for (const auto& h : dev.groups[g].hypotheses)
        stats_[g].push_back(sentence_bleu_stats(h.tokens, references[g], max_order));
  }

  double bleu(const FeatureWeights& w) const {
    const auto pick = rerank(dev_, w);
    BleuStats total(max_order_);
    for (std::size_t g = 0; g < pick.size(); ++g) total += stats_[g][pick[g]];
    return bleu_from_stats(total, smooth_).bleu;
  }

 private:
  const NBestList& dev_;
  bool smooth_;
  int max_order_;
  std::vector<std::vector<BleuStats>> stats_;
};

inline TuneResult tune_weights(const NBestList& dev, std::span<const std::vector<Sentence>> references,
                               const TuneOptions& opt = {}) {
  const RerankEvaluator eval(dev, references, opt.max_order, opt.smooth);
  const std::size_t m = dev.num_features();
  if (m == 0) throw InvalidArgument("tune: n-best list has no features");
  if (opt.grid.empty()) throw InvalidArgument("tune: empty search grid");

  auto all_zero = [](const FeatureWeights& w) {
    for (double v : w)
      if (v != 0.0) return false;
    return true;
  };

  auto ascend = [&](FeatureWeights w) {
    double best = eval.bleu(w);
    for (int pass = 0; pass < opt.max_passes; ++pass) {
      bool improved = false;
      for (std::size_t k = 0; k < m; ++k) {
        double keep = w[k];
        for (double v : opt.grid) {
          if (v == keep) continue;
          FeatureWeights trial = w;
          trial[k] = v;
          if (all_zero(trial)) continue;
          const double b = eval.bleu(trial);
          if (b > best) {
            best = b;
            keep = v;
            improved = true;
          }
        }
        w[k] = keep;
      }
      if (!improved) break;
    }
    return std::pair{w, best};
  };

  TuneResult result;
  const FeatureWeights ones(m, 1.0);
  result.baseline_bleu = eval.bleu(ones);
  std::tie(result.weights, result.bleu) = ascend(ones);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int r = 0; r < opt.restarts; ++r) {
    FeatureWeights start(m);
    for (auto& v : start) v = u(rng);
    if (all_zero(start)) start[0] = 1.0;
    auto [w, b] = ascend(start);
    if (b > result.bleu) {
      result.weights = w;
      result.bleu = b;
    }
  }
  return result;
}

}  // namespace cslm
