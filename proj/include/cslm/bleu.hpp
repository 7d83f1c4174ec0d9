// cslm/bleu.hpp

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

// Corpus BLEU: geometric mean of clipped n-gram precisions times a brevity
// penalty exp(min(0, 1 - r/c)). With several references an n-gram count is
// clipped by its maximum count in any one reference, and r sums, per
// sentence, the reference length closest to the candidate (ties go to the
// shorter one).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cslm/error.hpp"
#include "cslm/vocab.hpp"

namespace cslm {

inline constexpr int kBleuMaxOrder = 4;

struct BleuStats {
  int max_order = kBleuMaxOrder;
  std::vector<std::uint64_t> matches = std::vector<std::uint64_t>(kBleuMaxOrder, 0);
  std::vector<std::uint64_t> totals = std::vector<std::uint64_t>(kBleuMaxOrder, 0);
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;

  BleuStats() = default;
  explicit BleuStats(int order)
      : max_order(order),
        matches(static_cast<std::size_t>(order), 0),
        totals(static_cast<std::size_t>(order), 0) {}

  BleuStats& operator+=(const BleuStats& o) {
    if (o.max_order != max_order) throw InvalidArgument("BLEU stats of different order");
    for (std::size_t n = 0; n < matches.size(); ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
    return *this;
  }

  BleuStats& operator-=(const BleuStats& o) {
    for (std::size_t n = 0; n < matches.size(); ++n) {
      matches[n] -= o.matches[n];
      totals[n] -= o.totals[n];
    }
    candidate_length -= o.candidate_length;
    reference_length -= o.reference_length;
    return *this;
  }

  friend BleuStats operator+(BleuStats a, const BleuStats& b) { return a += b; }
  friend bool operator==(const BleuStats&, const BleuStats&) = default;
};

struct BleuResult {
  double bleu = 0.0;
  std::vector<double> precisions;
  double brevity_penalty = 0.0;
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;

  // Tab-separated: header line then one value line.
  void write_report(std::ostream& out) const {
    out << "bleu";
    for (std::size_t n = 0; n < precisions.size(); ++n) out << "\tp" << (n + 1);
    out << "\tbp\tcand_len\tref_len\n";
    const auto prec = out.precision(6);
    out << bleu;
    for (double p : precisions) out << '\t' << p;
    out << '\t' << brevity_penalty << '\t' << candidate_length << '\t' << reference_length << '\n';
    out.precision(prec);
  }
};

namespace detail {

using NGramCounts = std::map<std::vector<std::string>, std::uint32_t>;

inline NGramCounts count_ngrams(const Sentence& s, int n) {
  NGramCounts counts;
  const auto len = static_cast<std::ptrdiff_t>(s.size());
  for (std::ptrdiff_t i = 0; i + n <= len; ++i)
    ++counts[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace detail

inline BleuStats sentence_bleu_stats(const Sentence& candidate, std::span<const Sentence> references,
                                     int max_order = kBleuMaxOrder) {
  if (max_order < 1) throw InvalidArgument("BLEU: max order must be >= 1");
  if (references.empty()) throw InvalidArgument("BLEU: candidate without reference");
  BleuStats st(max_order);
  st.candidate_length = candidate.size();

  const auto c = static_cast<long long>(candidate.size());
  long long best = -1;
  for (const auto& r : references) {
    const auto len = static_cast<long long>(r.size());
    if (best < 0 || std::llabs(len - c) < std::llabs(best - c) ||
        (std::llabs(len - c) == std::llabs(best - c) && len < best))
      best = len;
  }
  st.reference_length = static_cast<std::uint64_t>(best);

  for (int n = 1; n <= max_order; ++n) {
    const auto cand = detail::count_ngrams(candidate, n);
    detail::NGramCounts max_ref;
    for (const auto& r : references)
      for (const auto& [gram, k] : detail::count_ngrams(r, n)) {
        auto& m = max_ref[gram];
        m = std::max(m, k);
      }
    std::uint64_t matched = 0, total = 0;
    for (const auto& [gram, k] : cand) {
      total += k;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) matched += std::min(k, it->second);
    }
    st.matches[static_cast<std::size_t>(n - 1)] = matched;
    st.totals[static_cast<std::size_t>(n - 1)] = total;
  }
  return st;
}

// Unsmoothed by default: any zero precision gives BLEU 0. With `smooth`,
// orders >= 2 use (matches + 1) / (totals + 1).
inline BleuResult bleu_from_stats(const BleuStats& st, bool smooth = false) {
  BleuResult r;
  r.candidate_length = st.candidate_length;
  r.reference_length = st.reference_length;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < st.matches.size(); ++n) {
    double m = static_cast<double>(st.matches[n]);
    double t = static_cast<double>(st.totals[n]);
    if (smooth && n > 0) {
      m += 1.0;
      t += 1.0;
    }
    const double p = t > 0.0 ? m / t : 0.0;
    r.precisions.push_back(p);
    if (p <= 0.0)
      zero = true;
    else
      log_sum += std::log(p);
  }
  if (st.candidate_length == 0) {
    r.brevity_penalty = 0.0;
    r.bleu = 0.0;
    return r;
  }
  const double ratio = static_cast<double>(st.reference_length) / static_cast<double>(st.candidate_length);
  r.brevity_penalty = std::exp(std::min(0.0, 1.0 - ratio));
  r.bleu = zero ? 0.0 : r.brevity_penalty * std::exp(log_sum / static_cast<double>(st.matches.size()));
  return r;
}

// references[i] holds every reference for candidates[i].
inline BleuResult corpus_bleu(std::span<const Sentence> candidates,
                              std::span<const std::vector<Sentence>> references,
                              int max_order = kBleuMaxOrder, bool smooth = false,
                              BleuStats* stats_out = nullptr) {
  if (candidates.size() != references.size())
    throw InvalidArgument("BLEU: candidate and reference lists differ in length");
  if (candidates.empty()) throw InvalidArgument("BLEU: no candidates");
  BleuStats total(max_order);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    total += sentence_bleu_stats(candidates[i], references[i], max_order);
  if (stats_out) *stats_out = total;
  return bleu_from_stats(total, smooth);
}

}  // namespace cslm
