// cslm/nbest.hpp

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

// N-best lists in the decoder's ` ||| ` layout:
//
//   <source id> ||| <target tokens> ||| <name>: v1 v2 <name>: v3 ... [||| <total>]
//
// and log-linear reranking: per source sentence, the hypothesis maximizing
// sum_m lambda_m h_m wins.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cslm/error.hpp"
#include "cslm/io.hpp"
#include "cslm/network.hpp"
#include "cslm/vocab.hpp"

namespace cslm {

struct Hypothesis {
  std::size_t source_id = 0;
  Sentence tokens;
  std::vector<double> features;
  std::optional<double> score;
};

struct NBestGroup {
  std::size_t source_id = 0;
  std::vector<Hypothesis> hypotheses;
};

// Named blocks of the flattened feature vector, in order of appearance.
struct FeatureBlock {
  std::string name;
  std::size_t width = 0;
  friend bool operator==(const FeatureBlock&, const FeatureBlock&) = default;
};

struct NBestList {
  std::vector<FeatureBlock> layout;
  std::vector<NBestGroup> groups;

  std::size_t num_features() const {
    std::size_t n = 0;
    for (const auto& b : layout) n += b.width;
    return n;
  }
  std::size_t num_hypotheses() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.hypotheses.size();
    return n;
  }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  constexpr std::string_view sep = "|||";
  std::size_t start = 0;
  while (true) {
    const auto p = line.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, p - start));
    start = p + sep.size();
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

inline bool parse_double(std::string_view s, double& v) {
  std::string tmp(s);
  char* end = nullptr;
  v = std::strtod(tmp.c_str(), &end);
  return !tmp.empty() && end == tmp.c_str() + tmp.size() && std::isfinite(v);
}

}  // namespace detail

inline NBestList parse_nbest(std::istream& in) {
  NBestList list;
  std::string line;
  std::size_t lineno = 0;
  bool have_layout = false;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("n-best line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() < 3) throw fail("expected at least 3 ' ||| '-separated fields");

    Hypothesis h;
    {
      const std::string id(fields[0]);
      if (id.empty() || id.find_first_not_of("0123456789") != std::string::npos)
        throw fail("bad source id '" + id + "'");
      h.source_id = std::stoull(id);
    }
    h.tokens = split_tokens(fields[1]);

    std::vector<FeatureBlock> layout;
    for (const auto& tok : split_tokens(fields[2])) {
      double v = 0.0;
      if (!tok.empty() && tok.back() == ':') {
        layout.push_back({tok.substr(0, tok.size() - 1), 0});
      } else if (detail::parse_double(tok, v)) {
        if (layout.empty()) layout.push_back({"", 0});
        ++layout.back().width;
        h.features.push_back(v);
      } else {
        throw fail("bad feature value '" + tok + "'");
      }
    }
    if (fields.size() >= 4 && !fields[3].empty()) {
      double v = 0.0;
      if (!detail::parse_double(fields[3], v)) throw fail("bad total score");
      h.score = v;
    }

    if (!have_layout) {
      list.layout = layout;
      have_layout = true;
    } else if (h.features.size() != list.num_features()) {
      throw fail("feature count " + std::to_string(h.features.size()) + " differs from " +
                 std::to_string(list.num_features()));
    } else if (layout != list.layout) {
      throw fail("feature names differ from earlier lines");
    }

    if (list.groups.empty() || list.groups.back().source_id != h.source_id) {
      if (!list.groups.empty() && h.source_id < list.groups.back().source_id)
        throw fail("source ids must be non-decreasing");
      list.groups.push_back({h.source_id, {}});
    }
    list.groups.back().hypotheses.push_back(std::move(h));
  }
  return list;
}

inline NBestList parse_nbest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open n-best file " + path);
  return parse_nbest(in);
}

inline void write_nbest(std::ostream& out, const NBestList& list) {
  const auto prec = out.precision(10);
  for (const auto& g : list.groups)
    for (const auto& h : g.hypotheses) {
      out << h.source_id << " |||";
      for (const auto& t : h.tokens) out << ' ' << t;
      out << " |||";
      std::size_t k = 0;
      for (const auto& b : list.layout) {
        if (!b.name.empty()) out << ' ' << b.name << ':';
        for (std::size_t j = 0; j < b.width; ++j) out << ' ' << h.features[k++];
      }
      if (h.score) out << " ||| " << *h.score;
      out << '\n';
    }
  out.precision(prec);
}

// Sum of natural-log probabilities over every predicted position of the
// sentence, including the final </s>. Out-of-short-list words are scored
// through the <oos> unit.
template <typename T>
double sentence_logprob(const Model<T>& model, const Vocabulary& vocab, const Sentence& tokens) {
  const NGramDataset ex = extract_ngrams(map_tokens(tokens, vocab), model.order(),
                                         static_cast<std::size_t>(model.shortlist()));
  long double sum = 0;
  for (T lp : score_examples(model, ex)) sum += static_cast<long double>(lp);
  return static_cast<double>(sum);
}

// Appends one feature, the network log probability, to every hypothesis.
template <typename T>
void add_cslm_feature(NBestList& list, const Model<T>& model, const Vocabulary& vocab,
                      const std::string& name = "cslm") {
  if (vocab.size() != static_cast<std::size_t>(model.vocab_size()) ||
      vocab.shortlist_size() != static_cast<std::size_t>(model.shortlist()))
    throw InvalidArgument("vocabulary does not match the model");
  const std::size_t k = static_cast<std::size_t>(model.shortlist());
  for (auto& g : list.groups) {
    // One scoring pass per group.
    NGramDataset ex(model.order());
    std::vector<std::size_t> ends;
    for (const auto& h : g.hypotheses) {
      extract_ngrams(map_tokens(h.tokens, vocab), model.order(), k, ex);
      ends.push_back(ex.size());
    }
    const std::vector<T> lp = score_examples(model, ex);
    std::size_t begin = 0;
    for (std::size_t i = 0; i < g.hypotheses.size(); ++i) {
      long double sum = 0;
      for (std::size_t j = begin; j < ends[i]; ++j) sum += static_cast<long double>(lp[j]);
      g.hypotheses[i].features.push_back(static_cast<double>(sum));
      begin = ends[i];
    }
  }
  list.layout.push_back({name, 1});
}

using FeatureWeights = std::vector<double>;

inline void validate_weights(const FeatureWeights& w) {
  bool nonzero = false;
  for (double v : w) {
    if (!std::isfinite(v)) throw InvalidArgument("weights must be finite");
    if (v != 0.0) nonzero = true;
  }
  if (!nonzero) throw InvalidArgument("at least one weight must be nonzero");
}

// One decimal weight per line.
inline FeatureWeights read_weights(std::istream& in) {
  FeatureWeights w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = split_tokens(line);
    if (toks.empty()) continue;
    double v = 0.0;
    if (toks.size() != 1 || !detail::parse_double(toks[0], v))
      throw ParseError("weights line " + std::to_string(lineno) + ": expected one number");
    w.push_back(v);
  }
  validate_weights(w);
  return w;
}

inline FeatureWeights read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open weights file " + path);
  return read_weights(in);
}

// Shortest representation that reads back to the same double.
inline void write_weights(std::ostream& out, const FeatureWeights& w) {
  char buf[64];
  for (double v : w) {
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, r.ptr - buf) << '\n';
  }
}

inline double loglinear_score(const Hypothesis& h, const FeatureWeights& w) {
  double s = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) s += w[m] * h.features[m];
  return s;
}

// Index of the best hypothesis of every group; ties keep the earlier one.
inline std::vector<std::size_t> rerank(const NBestList& list, const FeatureWeights& w) {
  if (w.size() != list.num_features())
    throw InvalidArgument("rerank: " + std::to_string(w.size()) + " weights for " +
                          std::to_string(list.num_features()) + " features");
  std::vector<std::size_t> best;
  best.reserve(list.groups.size());
  for (const auto& g : list.groups) {
    std::size_t arg = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.hypotheses.size(); ++i) {
      const double s = loglinear_score(g.hypotheses[i], w);
      if (i == 0 || s > top) {
        top = s;
        arg = i;
      }
    }
    best.push_back(arg);
  }
  return best;
}

}  // namespace cslm
