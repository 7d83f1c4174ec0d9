// cslm/adapt.hpp

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

// Fast adaptation of a trained network to a small in-domain corpus.
//
// Two methods share one driver:
//  - continued training: every parameter is updated on a per-epoch mixture
//    of all adaptation examples and a random sample of the generic data;
//  - adaptation layer: a square layer initialized to the identity is
//    inserted between existing layers and is the only thing trained.
//
// The mixture is described by a ResamplePlan. With adaptation set A, generic
// pool G and target adaptation share p, each generic example enters an epoch
// independently with probability
//
//   q = |A| (1 - p) / (p |G|)      (clamped to 1)
//
// so that the expected epoch holds |A| / p examples.

#pragma once

#include <algorithm>
#include <chrono>
#include <iterator>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cslm/error.hpp"
#include "cslm/model.hpp"
#include "cslm/network.hpp"
#include "cslm/train.hpp"
#include "cslm/vocab.hpp"

namespace cslm {

enum class SamplingMode {
  kBernoulli,  // each generic example independently with probability q
  kFixed,      // exactly round(q |G|) generic examples, without replacement
};

inline SamplingMode parse_sampling_mode(const std::string& s) {
  if (s == "bernoulli") return SamplingMode::kBernoulli;
  if (s == "fixed") return SamplingMode::kFixed;
  throw InvalidArgument("unknown sampling mode '" + s + "'");
}

inline const char* to_string(SamplingMode m) {
  return m == SamplingMode::kBernoulli ? "bernoulli" : "fixed";
}

using DatasetPtr = std::shared_ptr<const NGramDataset>;

struct ResamplePlan {
  DatasetPtr adaptation;
  DatasetPtr generic;
  double share = 0.0;      // requested adaptation share p
  double inclusion = 0.0;  // q
  bool clamped = false;    // q would have exceeded 1
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::kBernoulli;

  double expected_generic() const { return inclusion * static_cast<double>(generic->size()); }
  double expected_epoch_size() const {
    return static_cast<double>(adaptation->size()) + expected_generic();
  }
  double expected_share() const {
    return static_cast<double>(adaptation->size()) / expected_epoch_size();
  }
};

inline ResamplePlan build_resample_plan(DatasetPtr adaptation, DatasetPtr generic, double share,
                                        std::uint64_t seed,
                                        SamplingMode mode = SamplingMode::kBernoulli) {
  if (!adaptation || adaptation->empty()) throw InvalidArgument("resample plan: empty adaptation set");
  if (!generic || generic->empty()) throw InvalidArgument("resample plan: empty generic pool");
  if (!(share > 0.0 && share < 1.0)) throw InvalidArgument("resample plan: share must be in (0, 1)");
  if (adaptation->order() != generic->order())
    throw InvalidArgument("resample plan: adaptation and generic data differ in order");
  ResamplePlan plan;
  plan.adaptation = std::move(adaptation);
  plan.generic = std::move(generic);
  plan.share = share;
  plan.seed = seed;
  plan.mode = mode;
  const double q = static_cast<double>(plan.adaptation->size()) * (1.0 - share) /
                   (share * static_cast<double>(plan.generic->size()));
  plan.clamped = q > 1.0;
  plan.inclusion = std::min(q, 1.0);
  return plan;
}

inline ResamplePlan build_resample_plan(NGramDataset adaptation, NGramDataset generic, double share,
                                        std::uint64_t seed,
                                        SamplingMode mode = SamplingMode::kBernoulli) {
  return build_resample_plan(std::make_shared<const NGramDataset>(std::move(adaptation)),
                             std::make_shared<const NGramDataset>(std::move(generic)), share, seed,
                             mode);
}

struct EpochSample {
  NGramDataset examples;  // shuffled
  std::size_t adaptation_count = 0;
  std::size_t generic_count = 0;

  double realized_share() const {
    return static_cast<double>(adaptation_count) / static_cast<double>(examples.size());
  }
};

// Indices of the generic examples drawn for `epoch`.
inline std::vector<std::size_t> draw_generic(const ResamplePlan& plan, std::uint64_t epoch) {
  auto rng = derive_rng(plan.seed, 0x67656e65726963ULL, epoch);
  const std::size_t n = plan.generic->size();
  std::vector<std::size_t> picked;
  if (plan.mode == SamplingMode::kBernoulli) {
    picked.reserve(static_cast<std::size_t>(plan.expected_generic() * 1.1) + 16);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      if (u(rng) < plan.inclusion) picked.push_back(i);
  } else {
    const auto k = static_cast<std::size_t>(std::llround(plan.expected_generic()));
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::sample(all.begin(), all.end(), std::back_inserter(picked), std::min(k, n), rng);
  }
  return picked;
}

// All adaptation examples plus this epoch's generic draw, shuffled.
inline EpochSample sample_epoch(const ResamplePlan& plan, std::uint64_t epoch) {
  const std::vector<std::size_t> gen = draw_generic(plan, epoch);
  const std::size_t na = plan.adaptation->size();
  // Entries below na refer to the adaptation set.
  std::vector<std::size_t> order(na + gen.size());
  std::iota(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(na), std::size_t{0});
  for (std::size_t k = 0; k < gen.size(); ++k) order[na + k] = na + gen[k];
  auto rng = derive_rng(plan.seed, 0x73687566666c65ULL, epoch);
  std::shuffle(order.begin(), order.end(), rng);

  EpochSample s;
  s.adaptation_count = na;
  s.generic_count = gen.size();
  s.examples = NGramDataset(plan.adaptation->order());
  s.examples.reserve(order.size());
  for (std::size_t i : order) {
    if (i < na)
      s.examples.push_back(plan.adaptation->context(i), plan.adaptation->target(i));
    else
      s.examples.push_back(plan.generic->context(i - na), plan.generic->target(i - na));
  }
  return s;
}

// Held-out sets monitored after every adaptation epoch. Either may be null.
struct AdaptEval {
  const NGramDataset* dev = nullptr;
  const NGramDataset* indomain = nullptr;
};

struct AdaptEpochRow {
  std::uint64_t epoch = 0;
  std::size_t generic_draw = 0;
  std::size_t epoch_size = 0;
  double realized_share = 0.0;
  double rate = 0.0;
  double train_nll = 0.0;
  double dev_ppl = std::numeric_limits<double>::quiet_NaN();
  double indomain_ppl = std::numeric_limits<double>::quiet_NaN();
};

struct AdaptReport {
  std::vector<AdaptEpochRow> rows;
  double seconds = 0.0;

  static void write_header(std::ostream& out) {
    out << "epoch\tgeneric_draw\tepoch_size\trealized_share\ttrain_nll\tdev_ppl\tindomain_ppl\n";
  }

  static void write_row(std::ostream& out, const AdaptEpochRow& r) {
    auto num = [&](double v) -> std::ostream& {
      if (std::isnan(v)) return out << '-';
      return out << v;
    };
    const auto prec = out.precision(6);
    out << r.epoch << '\t' << r.generic_draw << '\t' << r.epoch_size << '\t';
    num(r.realized_share) << '\t';
    num(r.train_nll) << '\t';
    num(r.dev_ppl) << '\t';
    num(r.indomain_ppl) << '\n';
    out.precision(prec);
  }

  void write_tsv(std::ostream& out) const {
    write_header(out);
    for (const auto& r : rows) write_row(out, r);
  }
};

using AdaptCallback = std::function<void(const AdaptEpochRow&)>;

namespace detail {

template <typename T>
AdaptReport run_adaptation(Model<T>& model, const ResamplePlan& plan, int epochs,
                           const LrSchedule& schedule, const AdaptEval& eval,
                           const AdaptCallback& on_epoch) {
  schedule.validate();
  if (!plan.adaptation || !plan.generic) throw InvalidArgument("adaptation: plan has no data");
  if (plan.adaptation->order() != model.order())
    throw InvalidArgument("adaptation: data order differs from model order");
  AdaptReport report;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> order;
  for (int e = 0; e < epochs; ++e) {
    EpochSample s = sample_epoch(plan, static_cast<std::uint64_t>(e));
    order.resize(s.examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    AdaptEpochRow row;
    row.rate = schedule.rate(static_cast<std::uint64_t>(e));
    row.train_nll = train_epoch(model, s.examples, order, row.rate);
    row.epoch = model.epoch();
    row.generic_draw = s.generic_count;
    row.epoch_size = s.examples.size();
    row.realized_share = s.realized_share();
    if (eval.dev) row.dev_ppl = perplexity(model, *eval.dev).ppl;
    if (eval.indomain) row.indomain_ppl = perplexity(model, *eval.indomain).ppl;
    report.rows.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace detail

// Resumes training of every parameter on the plan's per-epoch mixtures.
// The model's epoch counter keeps counting from its trained value; the
// learning-rate schedule restarts at epoch 0 of the adaptation run.
template <typename T>
AdaptReport continued_training(Model<T>& model, const ResamplePlan& plan, int epochs,
                               const LrSchedule& schedule, const AdaptEval& eval = {},
                               const AdaptCallback& on_epoch = {}) {
  if (epochs < 0) throw InvalidArgument("adaptation: negative epoch count");
  if (epochs == 0) return {};
  model.set_all_trainable(true);
  return detail::run_adaptation(model, plan, epochs, schedule, eval, on_epoch);
}

struct AdaptLayerSpec {
  // Index in the layer list the new layer will occupy: 0 sits directly on
  // the projection, num_layers() - 1 directly below the softmax.
  std::size_t position = 0;
  Activation activation = Activation::kTanh;
  // Must equal the activation dimension at `position`.
  int width = 0;

  // Spec whose width matches `model` at `position`.
  template <typename T>
  static AdaptLayerSpec at(const Model<T>& model, std::size_t position, Activation act) {
    if (position >= model.num_layers())
      throw InvalidArgument("adaptation layer: position past the output layer");
    return {position, act, model.dim_before(position)};
  }

  // Directly below the softmax.
  template <typename T>
  static AdaptLayerSpec last(const Model<T>& model, Activation act) {
    return at(model, model.num_layers() - 1, act);
  }
};

// Copy of `model` with an identity-initialized, zero-bias square layer
// inserted at spec.position. The new layer is the only trainable part.
template <typename T>
Model<T> insert_adaptation_layer(const Model<T>& model, const AdaptLayerSpec& spec) {
  if (spec.position >= model.num_layers())
    throw InvalidArgument("adaptation layer: position past the output layer");
  if (spec.activation == Activation::kSoftmax)
    throw InvalidArgument("adaptation layer: softmax is only legal as the output layer");
  const int dim = model.dim_before(spec.position);
  if (spec.width != dim)
    throw InvalidArgument("adaptation layer: width " + std::to_string(spec.width) +
                          " does not match dimension " + std::to_string(dim) +
                          " at insertion point (layer must be square)");
  Model<T> out = model;
  Layer<T> l;
  l.weight = Matrix<T>::Identity(dim, dim);
  l.bias = Vector<T>::Zero(dim);
  l.activation = spec.activation;
  out.set_all_trainable(false);
  l.trainable = true;
  auto& layers = out.layers();
  layers.insert(layers.begin() + static_cast<std::ptrdiff_t>(spec.position), std::move(l));
  out.sync_config();
  out.check_consistency();
  return out;
}

// Inserts an adaptation layer into `model` and trains only that layer.
template <typename T>
AdaptReport adapt_with_layer(Model<T>& model, const AdaptLayerSpec& spec, const ResamplePlan& plan,
                             int epochs, const LrSchedule& schedule, const AdaptEval& eval = {},
                             const AdaptCallback& on_epoch = {}) {
  if (epochs < 0) throw InvalidArgument("adaptation: negative epoch count");
  model = insert_adaptation_layer(model, spec);
  return detail::run_adaptation(model, plan, epochs, schedule, eval, on_epoch);
}

// ---------------------------------------------------------------------------
// Day-by-day adaptation: after day d, the adaptation pool is days 1..d.

enum class DayMode {
  kFixedGeneric,  // the same expected generic draw every day
  kShare,         // an explicit combined adaptation share per day
};

struct DayScheduleOptions {
  DayMode mode = DayMode::kFixedGeneric;
  double generic_count = 0.0;  // kFixedGeneric
  std::vector<double> shares;  // kShare: one per day, or a single value for all
  std::uint64_t seed = 0;
  SamplingMode sampling = SamplingMode::kBernoulli;
};

struct DaySchedule {
  std::vector<ResamplePlan> plans;         // plans[d] adapts on days 0..d
  std::vector<DatasetPtr> pools;           // pools[d] = days 0..d concatenated
  std::vector<std::vector<double>> shares; // shares[d][i]: expected share of day i
  std::vector<double> generic_share;       // expected generic share per plan

  // Rows are days, columns are the pools (Days 1-1, Days 1-2, ...), in
  // percent. The last row is the generic share.
  void write_table(std::ostream& out) const {
    const std::size_t n = plans.size();
    out << "day";
    for (std::size_t d = 0; d < n; ++d) out << "\tdays_1-" << (d + 1);
    out << '\n';
    const auto flags = out.flags();
    const auto prec = out.precision();
    out.setf(std::ios::fixed);
    out.precision(1);
    for (std::size_t i = 0; i < n; ++i) {
      out << (i + 1);
      for (std::size_t d = 0; d < n; ++d) {
        out << '\t';
        if (i > d)
          out << '-';
        else
          out << 100.0 * shares[d][i];
      }
      out << '\n';
    }
    out << "generic";
    for (std::size_t d = 0; d < n; ++d) out << '\t' << 100.0 * generic_share[d];
    out << '\n';
    out.flags(flags);
    out.precision(prec);
  }
};

inline DaySchedule build_day_schedule(const std::vector<NGramDataset>& days, DatasetPtr generic,
                                      const DayScheduleOptions& opt) {
  if (days.empty()) throw InvalidArgument("day schedule: no days");
  if (!generic || generic->empty()) throw InvalidArgument("day schedule: empty generic pool");
  for (std::size_t i = 0; i < days.size(); ++i)
    if (days[i].empty())
      throw InvalidArgument("day schedule: day " + std::to_string(i + 1) + " corpus is empty");
  if (opt.mode == DayMode::kFixedGeneric && !(opt.generic_count > 0.0))
    throw InvalidArgument("day schedule: generic count must be positive");
  if (opt.mode == DayMode::kShare && opt.shares.size() != 1 && opt.shares.size() != days.size())
    throw InvalidArgument("day schedule: need one share, or one per day");

  DaySchedule s;
  NGramDataset pool(days.front().order());
  for (std::size_t d = 0; d < days.size(); ++d) {
    pool.append(days[d]);
    auto a = std::make_shared<const NGramDataset>(pool);
    const double na = static_cast<double>(a->size());
    double p = 0.0;
    if (opt.mode == DayMode::kFixedGeneric)
      p = na / (na + opt.generic_count);
    else
      p = opt.shares.size() == 1 ? opt.shares[0] : opt.shares[d];
    ResamplePlan plan = build_resample_plan(a, generic, p, opt.seed + d, opt.sampling);
    const double total = plan.expected_epoch_size();
    std::vector<double> sh;
    for (std::size_t i = 0; i <= d; ++i) sh.push_back(static_cast<double>(days[i].size()) / total);
    s.shares.push_back(std::move(sh));
    s.generic_share.push_back(plan.expected_generic() / total);
    s.pools.push_back(a);
    s.plans.push_back(std::move(plan));
  }
  return s;
}

enum class AdaptMethod { kContinued, kLayer };

inline AdaptMethod parse_adapt_method(const std::string& s) {
  if (s == "continued") return AdaptMethod::kContinued;
  if (s == "layer") return AdaptMethod::kLayer;
  throw InvalidArgument("unknown adaptation method '" + s + "'");
}

struct AdaptOptions {
  AdaptMethod method = AdaptMethod::kContinued;
  // kLayer: position (SIZE_MAX = directly below the softmax) and activation.
  std::size_t layer_position = std::numeric_limits<std::size_t>::max();
  Activation layer_activation = Activation::kTanh;
  int epochs = 50;
  LrSchedule schedule{0.0005, 0.97};
};

// Applies `opt` to a copy of `base` using `plan`.
template <typename T>
Model<T> adapt_model(const Model<T>& base, const ResamplePlan& plan, const AdaptOptions& opt,
                     AdaptReport* report = nullptr, const AdaptEval& eval = {},
                     const AdaptCallback& on_epoch = {}) {
  Model<T> m = base;
  AdaptReport r;
  if (opt.method == AdaptMethod::kContinued) {
    r = continued_training(m, plan, opt.epochs, opt.schedule, eval, on_epoch);
  } else {
    const std::size_t pos = opt.layer_position == std::numeric_limits<std::size_t>::max()
                                ? base.num_layers() - 1
                                : opt.layer_position;
    r = adapt_with_layer(m, AdaptLayerSpec::at(base, pos, opt.layer_activation), plan, opt.epochs,
                         opt.schedule, eval, on_epoch);
  }
  if (report) *report = std::move(r);
  return m;
}

struct DayResult {
  std::size_t eval_day = 0;  // 1-based day evaluated
  std::size_t adapted_on = 0;  // adapted on days 1..adapted_on
  double baseline_ppl = 0.0;
  double adapted_ppl = 0.0;

  double relative_reduction() const { return 1.0 - adapted_ppl / baseline_ppl; }
};

// For each d < days.size() - 1: adapt the base model on days 1..d and
// measure perplexity on day d+1 against the unadapted base.
template <typename T>
std::vector<DayResult> simulate_days(const Model<T>& base, const std::vector<NGramDataset>& days,
                                     const DaySchedule& schedule, const AdaptOptions& opt) {
  if (days.size() < 2) throw InvalidArgument("simulate days: need at least two days");
  if (schedule.plans.size() < days.size() - 1)
    throw InvalidArgument("simulate days: schedule shorter than the day list");
  std::vector<DayResult> out;
  for (std::size_t d = 0; d + 1 < days.size(); ++d) {
    DayResult r;
    r.eval_day = d + 2;
    r.adapted_on = d + 1;
    r.baseline_ppl = perplexity(base, days[d + 1]).ppl;
    const Model<T> adapted = adapt_model(base, schedule.plans[d], opt);
    r.adapted_ppl = perplexity(adapted, days[d + 1]).ppl;
    out.push_back(r);
  }
  return out;
}

}  // namespace cslm
