// tests/test_adapt.cpp

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "cslm/adapt.hpp"
#include "oracles.hpp"

namespace cslm {
namespace {

using testing::random_dataset;

// Order-2 dataset whose i-th example has context word first + i, so every
// example can be traced back to its source.
std::shared_ptr<const NGramDataset> tagged(WordId first, std::size_t n) {
  NGramDataset d(2);
  d.reserve(n);
  for (std::size_t i = 0; i < n; ++i) d.push_back(std::vector<WordId>{first + static_cast<WordId>(i)}, 0);
  return std::make_shared<const NGramDataset>(std::move(d));
}

NetworkConfig small_config() {
  NetworkConfig c;
  c.order = 3;
  c.projection = 4;
  c.hidden = {6, 6, 6};
  c.vocab_size = 10;
  c.shortlist = 8;
  c.batch_size = 8;
  c.seed = 5;
  return c;
}

TEST(Plan, InclusionFormula) {
  const auto plan = build_resample_plan(tagged(0, 300), tagged(300, 5000), 0.2, 1);
  EXPECT_DOUBLE_EQ(plan.inclusion, 300.0 * 0.8 / (0.2 * 5000.0));
  EXPECT_FALSE(plan.clamped);
  EXPECT_NEAR(plan.expected_epoch_size(), 300.0 / 0.2, 1e-9);
  EXPECT_NEAR(plan.expected_share(), 0.2, 1e-12);
}

TEST(Plan, MixtureSizesOfTheFourteenAndTwentyFivePercentRows) {
  auto a = tagged(0, 3220);
  auto g = tagged(3220, 200000);
  const auto p14 = build_resample_plan(a, g, 0.1426, 1);
  EXPECT_NEAR(p14.expected_generic(), 19356.0, 19356.0 * 0.001);
  EXPECT_NEAR(p14.expected_epoch_size(), 22576.0, 22576.0 * 0.001);
  const auto p25 = build_resample_plan(a, g, 0.2493, 1);
  EXPECT_NEAR(p25.expected_generic(), 9696.0, 9696.0 * 0.001);
  EXPECT_NEAR(p25.expected_epoch_size(), 12916.0, 12916.0 * 0.001);
}

TEST(Plan, SymmetricCaseTakesEverything) {
  const auto plan = build_resample_plan(tagged(0, 1000), tagged(1000, 1000), 0.5, 3);
  EXPECT_EQ(plan.inclusion, 1.0);
  for (std::uint64_t e = 0; e < 5; ++e) EXPECT_EQ(sample_epoch(plan, e).examples.size(), 2000u);
}

TEST(Plan, ClampsWhenGenericPoolTooSmall) {
  const auto plan = build_resample_plan(tagged(0, 100), tagged(100, 50), 0.1, 1);
  EXPECT_TRUE(plan.clamped);
  EXPECT_EQ(plan.inclusion, 1.0);
  EXPECT_EQ(sample_epoch(plan, 0).examples.size(), 150u);
}

TEST(Plan, Errors) {
  auto a = tagged(0, 10), g = tagged(10, 10);
  EXPECT_THROW(build_resample_plan(a, g, 0.0, 1), InvalidArgument);
  EXPECT_THROW(build_resample_plan(a, g, 1.0, 1), InvalidArgument);
  EXPECT_THROW(build_resample_plan(a, g, 1.5, 1), InvalidArgument);
  EXPECT_THROW(build_resample_plan(std::make_shared<const NGramDataset>(2), g, 0.5, 1), InvalidArgument);
  EXPECT_THROW(build_resample_plan(a, std::make_shared<const NGramDataset>(2), 0.5, 1), InvalidArgument);
  EXPECT_THROW(build_resample_plan(a, std::make_shared<const NGramDataset>(3), 0.5, 1), InvalidArgument);
}

TEST(Sampling, EveryAdaptationExampleOncePerEpoch) {
  const auto plan = build_resample_plan(tagged(0, 200), tagged(200, 3000), 0.3, 9);
  for (std::uint64_t e = 0; e < 10; ++e) {
    const EpochSample s = sample_epoch(plan, e);
    std::multiset<WordId> seen;
    for (std::size_t i = 0; i < s.examples.size(); ++i) seen.insert(s.examples.context(i)[0]);
    for (WordId w = 0; w < 200; ++w) ASSERT_EQ(seen.count(w), 1u);
    // Generic examples appear at most once.
    for (WordId w : seen) ASSERT_LT(w, 3200);
    EXPECT_EQ(s.adaptation_count, 200u);
    EXPECT_EQ(s.examples.size(), 200u + s.generic_count);
    EXPECT_EQ(std::set<WordId>(seen.begin(), seen.end()).size(), seen.size());
  }
}

TEST(Sampling, OutputIsShuffled) {
  const auto plan = build_resample_plan(tagged(0, 200), tagged(200, 3000), 0.3, 9);
  const EpochSample s = sample_epoch(plan, 0);
  std::size_t adapt_in_front = 0;
  for (std::size_t i = 0; i < 200; ++i) adapt_in_front += s.examples.context(i)[0] < 200;
  EXPECT_LT(adapt_in_front, 150u);
}

TEST(Sampling, DeterministicPerEpochAndDifferentAcrossEpochs) {
  const auto plan = build_resample_plan(tagged(0, 100), tagged(100, 2000), 0.2, 4);
  EXPECT_TRUE(sample_epoch(plan, 3).examples == sample_epoch(plan, 3).examples);
  EXPECT_NE(draw_generic(plan, 0), draw_generic(plan, 1));
  auto other = build_resample_plan(tagged(0, 100), tagged(100, 2000), 0.2, 5);
  EXPECT_NE(draw_generic(plan, 0), draw_generic(other, 0));
}

TEST(Sampling, NearOneShareGivesAdaptationOnly) {
  const auto plan = build_resample_plan(tagged(0, 10), tagged(10, 100), 1.0 - 1e-9, 1);
  for (std::uint64_t e = 0; e < 20; ++e) EXPECT_EQ(sample_epoch(plan, e).examples.size(), 10u);
}

TEST(Sampling, BinomialGenericCount) {
  // q = 0.1 over |G| = 10,000.
  const auto plan = build_resample_plan(tagged(0, 1000), tagged(1000, 10000), 0.5, 21);
  ASSERT_DOUBLE_EQ(plan.inclusion, 0.1);
  double sum = 0.0;
  const int epochs = 200;
  for (int e = 0; e < epochs; ++e) sum += static_cast<double>(draw_generic(plan, static_cast<std::uint64_t>(e)).size());
  const double mean = sum / epochs;
  const double sd_of_mean = std::sqrt(10000 * 0.1 * 0.9 / epochs);
  EXPECT_LE(std::abs(mean - 1000.0), 3.0 * sd_of_mean);
}

TEST(Sampling, FixedModeDrawsExactCount) {
  const auto plan = build_resample_plan(tagged(0, 300), tagged(300, 5000), 0.2, 2, SamplingMode::kFixed);
  for (std::uint64_t e = 0; e < 5; ++e) {
    const auto picked = draw_generic(plan, e);
    EXPECT_EQ(picked.size(), 1200u);
    EXPECT_EQ(std::set<std::size_t>(picked.begin(), picked.end()).size(), picked.size());
  }
}

TEST(Sampling, RealizedShareConvergesProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const double p = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    const std::size_t na = 500;
    const auto plan = build_resample_plan(tagged(0, na), tagged(na, 40000), p, rng());
    double share = 0.0;
    for (std::uint64_t e = 0; e < 40; ++e) share += sample_epoch(plan, e).realized_share();
    EXPECT_NEAR(share / 40.0, p, 0.01) << "p=" << p;
  }
}

TEST(Sampling, ModeNames) {
  EXPECT_EQ(parse_sampling_mode("bernoulli"), SamplingMode::kBernoulli);
  EXPECT_EQ(parse_sampling_mode("fixed"), SamplingMode::kFixed);
  EXPECT_THROW(parse_sampling_mode("other"), InvalidArgument);
}

TEST(Insert, LinearIdentityLayerIsANoOp) {
  std::mt19937_64 rng(4);
  auto m = init_network<double>(small_config());
  for (auto& l : m.layers()) l.bias.setRandom();
  const auto d = random_dataset(rng, 3, 10, 8, 30);
  const auto ref = forward(m, d);
  for (std::size_t pos = 0; pos < m.num_layers(); ++pos) {
    const auto a = insert_adaptation_layer(m, AdaptLayerSpec::at(m, pos, Activation::kLinear));
    const auto p = forward(a, d);
    for (Eigen::Index i = 0; i < p.size(); ++i)
      EXPECT_LE(testing::rel_diff(p(i), ref(i)), 1e-12) << "position " << pos;
  }
}

TEST(Insert, TanhLayerChangesOutputsButStaysNormalized) {
  std::mt19937_64 rng(5);
  const auto m = init_network<float>(small_config());
  const auto d = random_dataset(rng, 3, 10, 8, 20);
  const auto a = insert_adaptation_layer(m, AdaptLayerSpec::last(m, Activation::kTanh));
  const auto p = forward(a, d), ref = forward(m, d);
  EXPECT_GT((p - ref).cwiseAbs().maxCoeff(), 1e-6f);
  for (Eigen::Index b = 0; b < p.rows(); ++b) EXPECT_NEAR(p.row(b).sum(), 1.0f, 1e-6f);
}

TEST(Insert, StructureAndFlags) {
  const auto m = init_network<float>(small_config());
  const auto a = insert_adaptation_layer(m, AdaptLayerSpec::at(m, 2, Activation::kTanh));
  ASSERT_EQ(a.num_layers(), m.num_layers() + 1);
  EXPECT_TRUE(a.layers()[2].weight.isIdentity());
  EXPECT_TRUE(a.layers()[2].bias.isZero());
  EXPECT_TRUE(a.layers()[2].trainable);
  EXPECT_FALSE(a.embedding_trainable());
  EXPECT_TRUE(a.embedding() == m.embedding());
  for (std::size_t i = 0, j = 0; i < a.num_layers(); ++i) {
    if (i == 2) continue;
    EXPECT_FALSE(a.layers()[i].trainable);
    EXPECT_TRUE(a.layers()[i].weight == m.layers()[j].weight);
    EXPECT_TRUE(a.layers()[i].bias == m.layers()[j].bias);
    ++j;
  }
  EXPECT_EQ(a.config().hidden.size(), 4u);
}

TEST(Insert, Errors) {
  NetworkConfig c = small_config();
  c.hidden = {6, 5};
  const auto m = init_network<float>(c);
  EXPECT_THROW(insert_adaptation_layer(m, {1, Activation::kTanh, 5}), InvalidArgument);
  EXPECT_THROW(insert_adaptation_layer(m, {1, Activation::kSoftmax, 6}), InvalidArgument);
  EXPECT_THROW(insert_adaptation_layer(m, {3, Activation::kTanh, 5}), InvalidArgument);
  EXPECT_THROW(AdaptLayerSpec::at(m, 3, Activation::kTanh), InvalidArgument);
  EXPECT_EQ(AdaptLayerSpec::at(m, 0, Activation::kTanh).width, 8);
  EXPECT_EQ(AdaptLayerSpec::last(m, Activation::kTanh).width, 5);
}

TEST(AdaptLayer, OnlyInsertedLayerChanges) {
  std::mt19937_64 rng(6);
  const auto base = init_network<float>(small_config());
  const auto plan = build_resample_plan(random_dataset(rng, 3, 10, 8, 50),
                                        random_dataset(rng, 3, 10, 8, 400), 0.25, 1);
  const AdaptLayerSpec spec = AdaptLayerSpec::at(base, 1, Activation::kTanh);
  const auto inserted = insert_adaptation_layer(base, spec);
  auto m = base;
  adapt_with_layer(m, spec, plan, 10, LrSchedule{0.1, 0.97});
  EXPECT_TRUE(m.embedding() == inserted.embedding());
  for (std::size_t i = 0; i < m.num_layers(); ++i) {
    if (i == 1)
      EXPECT_FALSE(m.layers()[i] == inserted.layers()[i]);
    else
      EXPECT_TRUE(m.layers()[i] == inserted.layers()[i]);
  }
}

TEST(Continued, ZeroEpochsLeavesModelUnchanged) {
  std::mt19937_64 rng(7);
  auto m = init_network<float>(small_config());
  m.layers()[0].trainable = false;
  const auto before = m;
  const auto plan = build_resample_plan(random_dataset(rng, 3, 10, 8, 20),
                                        random_dataset(rng, 3, 10, 8, 100), 0.25, 1);
  const auto r = continued_training(m, plan, 0, LrSchedule{0.1, 0.9});
  EXPECT_TRUE(m == before);
  EXPECT_TRUE(r.rows.empty());
}

TEST(Continued, TrainsEverythingAndContinuesEpochCount) {
  std::mt19937_64 rng(8);
  auto m = init_network<float>(small_config());
  train(m, random_dataset(rng, 3, 10, 8, 100), LrSchedule{0.1, 0.9}, 2, 1);
  m.set_all_trainable(false);
  const auto before = m;
  const auto plan = build_resample_plan(random_dataset(rng, 3, 10, 8, 20),
                                        random_dataset(rng, 3, 10, 8, 100), 0.25, 1);
  const auto r = continued_training(m, plan, 3, LrSchedule{0.1, 0.9});
  EXPECT_EQ(m.epoch(), 5u);
  EXPECT_TRUE(m.embedding_trainable());
  EXPECT_FALSE(m.embedding() == before.embedding());
  for (std::size_t i = 0; i < m.num_layers(); ++i) EXPECT_FALSE(m.layers()[i] == before.layers()[i]);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].epoch, 3u);
  EXPECT_DOUBLE_EQ(r.rows[2].rate, 0.1 * 0.9 * 0.9);
}

TEST(Adapt, ReportTable) {
  std::mt19937_64 rng(9);
  const auto base = init_network<float>(small_config());
  const auto dev = random_dataset(rng, 3, 10, 8, 30);
  const auto plan = build_resample_plan(random_dataset(rng, 3, 10, 8, 20),
                                        random_dataset(rng, 3, 10, 8, 100), 0.25, 1);
  AdaptOptions opt;
  opt.epochs = 2;
  AdaptReport report;
  adapt_model(base, plan, opt, &report, AdaptEval{&dev, nullptr});
  std::ostringstream os;
  report.write_tsv(os);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  EXPECT_EQ(header, "epoch\tgeneric_draw\tepoch_size\trealized_share\ttrain_nll\tdev_ppl\tindomain_ppl");
  std::getline(is, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), '\t'), 6);
  EXPECT_EQ(row.substr(row.size() - 2), "\t-");
}

TEST(Adapt, MethodNames) {
  EXPECT_EQ(parse_adapt_method("continued"), AdaptMethod::kContinued);
  EXPECT_EQ(parse_adapt_method("layer"), AdaptMethod::kLayer);
  EXPECT_THROW(parse_adapt_method("other"), InvalidArgument);
}

TEST(Days, SingleDayShare) {
  const std::vector<NGramDataset> days{*tagged(0, 300)};
  DayScheduleOptions o;
  o.generic_count = 700;
  const auto s = build_day_schedule(days, tagged(300, 5000), o);
  EXPECT_NEAR(s.shares[0][0], 0.3, 1e-12);
  EXPECT_NEAR(s.generic_share[0], 0.7, 1e-12);
}

TEST(Days, TwoEqualDaysArithmetic) {
  const double a = 1000.0, g = a * (1.0 - 0.39) / 0.39;
  const std::vector<NGramDataset> days{*tagged(0, 1000), *tagged(1000, 1000)};
  DayScheduleOptions o;
  o.generic_count = g;
  const auto s = build_day_schedule(days, tagged(2000, 20000), o);
  EXPECT_NEAR(s.shares[0][0], 0.39, 1e-12);
  EXPECT_NEAR(s.shares[1][0], a / (2 * a + g), 1e-12);
  EXPECT_NEAR(s.shares[1][1], a / (2 * a + g), 1e-12);
  EXPECT_NEAR(s.shares[1][0] + s.shares[1][1], 0.5614, 1e-3);
  EXPECT_NEAR(s.shares[1][0], 0.2807, 1e-3);
}

TEST(Days, ProportionsSumToOneAndPoolsGrow) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<NGramDataset> days;
    WordId next = 0;
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int d = 0; d < n; ++d) {
      const std::size_t len = std::uniform_int_distribution<std::size_t>(50, 400)(rng);
      days.push_back(*tagged(next, len));
      next += static_cast<WordId>(len);
    }
    DayScheduleOptions o;
    if (trial % 2) {
      o.mode = DayMode::kShare;
      o.shares = {std::uniform_real_distribution<double>(0.1, 0.6)(rng)};
    } else {
      o.generic_count = std::uniform_real_distribution<double>(100, 3000)(rng);
    }
    const auto s = build_day_schedule(days, tagged(next, 50000), o);
    for (std::size_t d = 0; d < days.size(); ++d) {
      double total = s.generic_share[d];
      for (double v : s.shares[d]) total += v;
      EXPECT_NEAR(total, 1.0, 1e-3);
      EXPECT_EQ(s.pools[d]->size(), s.plans[d].adaptation->size());
      if (d > 0) {
        // Strict superset, previous pool as a prefix.
        const auto& prev = *s.pools[d - 1];
        const auto& cur = *s.pools[d];
        ASSERT_GT(cur.size(), prev.size());
        for (std::size_t i = 0; i < prev.size(); ++i) {
          ASSERT_EQ(cur.context(i)[0], prev.context(i)[0]);
          ASSERT_EQ(cur.target(i), prev.target(i));
        }
      }
    }
    std::ostringstream table;
    s.write_table(table);
    EXPECT_NE(table.str().find("generic"), std::string::npos);
  }
}

TEST(Days, Errors) {
  DayScheduleOptions o;
  o.generic_count = 100;
  EXPECT_THROW(build_day_schedule({}, tagged(0, 10), o), InvalidArgument);
  EXPECT_THROW(build_day_schedule({*tagged(0, 10), NGramDataset(2)}, tagged(10, 100), o), InvalidArgument);
  o.generic_count = 0;
  EXPECT_THROW(build_day_schedule({*tagged(0, 10)}, tagged(10, 100), o), InvalidArgument);
  o.mode = DayMode::kShare;
  o.shares = {0.2, 0.3};
  EXPECT_THROW(build_day_schedule({*tagged(0, 10)}, tagged(10, 100), o), InvalidArgument);
}

TEST(Days, SimulationRows) {
  std::mt19937_64 rng(11);
  const auto base = init_network<float>(small_config());
  std::vector<NGramDataset> days;
  for (int d = 0; d < 3; ++d) days.push_back(random_dataset(rng, 3, 10, 8, 40));
  DayScheduleOptions o;
  o.generic_count = 100;
  const auto s = build_day_schedule(days, std::make_shared<const NGramDataset>(random_dataset(rng, 3, 10, 8, 300)), o);
  AdaptOptions opt;
  opt.epochs = 2;
  const auto rows = simulate_days(base, days, s, opt);
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].eval_day, i + 2);
    EXPECT_EQ(rows[i].adapted_on, i + 1);
    EXPECT_NEAR(rows[i].relative_reduction(), 1.0 - rows[i].adapted_ppl / rows[i].baseline_ppl, 1e-12);
  }
  EXPECT_THROW(simulate_days(base, {days[0]}, s, opt), InvalidArgument);
}

}  // namespace
}  // namespace cslm
