// tests/test_bleu.cpp

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

#include <cmath>
#include <random>
#include <sstream>

#include "cslm/bleu.hpp"

namespace cslm {
namespace {

Sentence S(const std::string& s) { return split_tokens(s); }

std::vector<std::vector<Sentence>> single(const std::vector<Sentence>& refs) {
  std::vector<std::vector<Sentence>> out;
  for (const auto& r : refs) out.push_back({r});
  return out;
}

// Naive recount: for every n-gram occurrence in the candidate, count its
// occurrences in the candidate and in each reference by linear scans.
BleuStats naive_stats(const Sentence& cand, const std::vector<Sentence>& refs, int max_order) {
  BleuStats st(max_order);
  st.candidate_length = cand.size();
  std::size_t best = refs[0].size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  st.reference_length = best;
  auto occurrences = [](const Sentence& s, const Sentence& s_from, std::size_t at, int n) {
    std::uint64_t k = 0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i)
      if (std::equal(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i) + n,
                     s_from.begin() + static_cast<long>(at)))
        ++k;
    return k;
  };
  for (int n = 1; n <= max_order; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (cand.size() < un) continue;
    double matched = 0;
    for (std::size_t i = 0; i + un <= cand.size(); ++i) {
      const std::uint64_t c = occurrences(cand, cand, i, n);
      std::uint64_t m = 0;
      for (const auto& r : refs) m = std::max(m, occurrences(r, cand, i, n));
      // Each occurrence contributes min(c, m) / c.
      matched += static_cast<double>(std::min(c, m)) / static_cast<double>(c);
    }
    st.matches[un - 1] = static_cast<std::uint64_t>(std::llround(matched));
    st.totals[un - 1] = cand.size() - un + 1;
  }
  return st;
}

Sentence random_sentence(std::mt19937_64& rng, int vocab, std::size_t max_len) {
  Sentence s(std::uniform_int_distribution<std::size_t>(0, max_len)(rng));
  for (auto& t : s) t = "w" + std::to_string(std::uniform_int_distribution<int>(0, vocab - 1)(rng));
  return s;
}

TEST(Bleu, IdenticalCorpusScoresOne) {
  const std::vector<Sentence> c{S("the cat sat on the mat"), S("a dog barked at the moon tonight")};
  const auto r = corpus_bleu(c, single(c));
  EXPECT_EQ(r.bleu, 1.0);
  EXPECT_EQ(r.brevity_penalty, 1.0);
}

TEST(Bleu, HandEnumeratedCatSat) {
  const std::vector<Sentence> c{S("the cat sat on the mat")};
  const auto r = corpus_bleu(c, single({S("the cat is on the mat")}));
  ASSERT_EQ(r.precisions.size(), 4u);
  EXPECT_DOUBLE_EQ(r.precisions[0], 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.precisions[1], 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.precisions[2], 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.precisions[3], 0.0);
  EXPECT_EQ(r.bleu, 0.0);
}

TEST(Bleu, BrevityPenaltyHalfLength) {
  const Sentence ref = S("a b c d e f g h");
  const std::vector<Sentence> c{S("a b c d")};
  const auto r = corpus_bleu(c, single({ref}));
  EXPECT_NEAR(r.brevity_penalty, std::exp(-1.0), 1e-12);
  EXPECT_NEAR(r.bleu, std::exp(-1.0), 1e-12);
}

TEST(Bleu, NoPenaltyForLongerCandidates) {
  const auto r = corpus_bleu(std::vector<Sentence>{S("a b c d e")}, single({S("a b c d")}));
  EXPECT_EQ(r.brevity_penalty, 1.0);
}

TEST(Bleu, MultiReferenceClipping) {
  const std::vector<std::vector<Sentence>> refs{{S("the cat"), S("the the dog")}};
  const auto st = sentence_bleu_stats(S("the the the"), refs[0]);
  EXPECT_EQ(st.matches[0], 2u);
  EXPECT_EQ(st.totals[0], 3u);
  EXPECT_EQ(st.matches[1], 1u);
}

TEST(Bleu, ClosestReferenceLengthTiesToShorter) {
  const std::vector<Sentence> refs{S("a b c d"), S("a b c d e f")};
  EXPECT_EQ(sentence_bleu_stats(S("a b c d e"), refs).reference_length, 4u);
  const std::vector<Sentence> refs2{S("a b c d e f g"), S("a b")};
  EXPECT_EQ(sentence_bleu_stats(S("a b c d e f"), refs2).reference_length, 7u);
}

TEST(Bleu, SmoothingAppliesFromBigramsOn) {
  const std::vector<Sentence> c{S("the cat sat on the mat")};
  const auto r = corpus_bleu(c, single({S("the cat is on the mat")}), 4, true);
  EXPECT_DOUBLE_EQ(r.precisions[0], 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.precisions[1], 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.precisions[3], 1.0 / 4.0);
  const double expect = std::exp((std::log(5.0 / 6) + std::log(4.0 / 6) + std::log(2.0 / 5) + std::log(1.0 / 4)) / 4);
  EXPECT_NEAR(r.bleu, expect, 1e-12);
}

TEST(Bleu, Errors) {
  const std::vector<Sentence> c{S("a")};
  EXPECT_THROW(corpus_bleu(c, single({})), InvalidArgument);
  EXPECT_THROW(corpus_bleu(std::vector<Sentence>{}, single({})), InvalidArgument);
  const std::vector<Sentence> none;
  EXPECT_THROW(sentence_bleu_stats(S("a"), none), InvalidArgument);
}

TEST(Bleu, EmptyCandidateScoresZero) {
  const auto r = corpus_bleu(std::vector<Sentence>{Sentence{}}, single({S("a b")}));
  EXPECT_EQ(r.bleu, 0.0);
}

TEST(Bleu, MatchesNaiveRecountProperty) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const Sentence cand = random_sentence(rng, 6, 14);
    std::vector<Sentence> refs;
    const int nref = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int k = 0; k < nref; ++k) refs.push_back(random_sentence(rng, 6, 14));
    EXPECT_TRUE(sentence_bleu_stats(cand, refs) == naive_stats(cand, refs, 4)) << "trial " << trial;
  }
}

TEST(Bleu, StatsAdditivityOnRandomSplits) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Sentence> cands;
    std::vector<std::vector<Sentence>> refs;
    for (int i = 0; i < 40; ++i) {
      cands.push_back(random_sentence(rng, 8, 12));
      refs.push_back({random_sentence(rng, 8, 12), random_sentence(rng, 8, 12)});
    }
    BleuStats whole;
    const auto r = corpus_bleu(cands, refs, 4, false, &whole);
    const std::size_t cut = std::uniform_int_distribution<std::size_t>(1, 39)(rng);
    BleuStats left, right;
    corpus_bleu(std::span(cands).first(cut), std::span(refs).first(cut), 4, false, &left);
    corpus_bleu(std::span(cands).subspan(cut), std::span(refs).subspan(cut), 4, false, &right);
    EXPECT_TRUE(left + right == whole);
    EXPECT_EQ(bleu_from_stats(left + right).bleu, r.bleu);
    BleuStats back = whole;
    back -= right;
    EXPECT_TRUE(back == left);
  }
}

TEST(Bleu, BoundedAndOneOnlyForExactMatchesProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Sentence> refs;
    for (int i = 0; i < 10; ++i) {
      Sentence s = random_sentence(rng, 30, 12);
      while (s.size() < 4) s.push_back("x");
      refs.push_back(s);
    }
    std::vector<Sentence> cands = refs;
    EXPECT_EQ(corpus_bleu(cands, single(refs)).bleu, 1.0);
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, 9)(rng);
    cands[i].back() = "never-in-a-reference";
    const double b = corpus_bleu(cands, single(refs), 4, true).bleu;
    EXPECT_GE(b, 0.0);
    EXPECT_LT(b, 1.0);
  }
}

TEST(Bleu, ReportLayout) {
  const auto r = corpus_bleu(std::vector<Sentence>{S("a b c d")}, single({S("a b c d")}));
  std::ostringstream os;
  r.write_report(os);
  EXPECT_EQ(os.str(), "bleu\tp1\tp2\tp3\tp4\tbp\tcand_len\tref_len\n1\t1\t1\t1\t1\t1\t4\t4\n");
}

}  // namespace
}  // namespace cslm
