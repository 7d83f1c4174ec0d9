// cslm/vocab.hpp

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

// Corpus ingestion, frequency-ranked vocabulary with a short-list boundary,
// and n-gram training example extraction.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cslm/error.hpp"

namespace cslm {

using WordId = std::int32_t;

using Sentence = std::vector<std::string>;
using Corpus = std::vector<Sentence>;

// Splits one line on runs of spaces/tabs.
inline Sentence split_tokens(std::string_view line) {
  Sentence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// One tokenized sentence per line. Blank lines are skipped.
inline Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    Sentence s = split_tokens(line);
    if (!s.empty()) corpus.push_back(std::move(s));
  }
  return corpus;
}

inline Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path);
  return read_corpus(in);
}

class Vocabulary {
 public:
  static constexpr WordId kBos = 0;
  static constexpr WordId kEos = 1;
  static constexpr WordId kUnk = 2;
  static constexpr WordId kOos = 3;
  static constexpr std::size_t kNumSpecials = 4;

  static constexpr std::string_view kSpecialTokens[kNumSpecials] = {"<s>", "</s>", "<unk>",
                                                                    "<oos>"};

  Vocabulary() { reset_specials(); }

  // Frequency-ranked tokens (most frequent first, ties lexicographic) become
  // ids 4.. in rank order. `max_vocab` and `shortlist_size` count the
  // specials; the short-list is clamped to the realized vocabulary size.
  static Vocabulary build(const Corpus& corpus, std::size_t max_vocab, std::size_t shortlist_size) {
    if (corpus.empty()) throw InvalidArgument("build_vocab: empty corpus");
    if (shortlist_size < kNumSpecials)
      throw InvalidArgument("build_vocab: shortlist size must be at least 4 (special tokens)");
    if (shortlist_size > max_vocab)
      throw InvalidArgument("build_vocab: shortlist size exceeds max vocabulary size");

    std::unordered_map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const auto& sentence : corpus)
      for (const auto& tok : sentence) {
        ++counts[tok];
        ++total;
      }
    if (total == 0) throw InvalidArgument("build_vocab: corpus has no tokens");

    std::vector<std::pair<std::string, std::uint64_t>> ranked;
    ranked.reserve(counts.size());
    for (auto& [tok, n] : counts)
      if (!is_special(tok)) ranked.emplace_back(tok, n);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ranked.size() > max_vocab - kNumSpecials) ranked.resize(max_vocab - kNumSpecials);

    Vocabulary v;
    for (auto& [tok, n] : ranked) v.add(tok, n);
    v.shortlist_size_ = std::min(shortlist_size, v.size());
    return v;
  }

  std::size_t size() const { return tokens_.size(); }
  std::size_t shortlist_size() const { return shortlist_size_; }
  bool in_shortlist(WordId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < shortlist_size_;
  }

  // Unknown strings map to <unk>.
  WordId id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  const std::string& token(WordId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::uint64_t frequency(WordId id) const { return freqs_.at(static_cast<std::size_t>(id)); }

  // `<rank> <token> <frequency>` per line, specials first with frequency 0.
  void write(std::ostream& out) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      out << i << ' ' << tokens_[i] << ' ' << freqs_[i] << '\n';
  }

  // The file does not carry the short-list boundary; the caller supplies it
  // (usually from the model it is paired with).
  static Vocabulary read(std::istream& in, std::size_t shortlist_size) {
    Vocabulary v;
    v.tokens_.clear();
    v.freqs_.clear();
    v.index_.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      Sentence fields = split_tokens(line);
      if (fields.empty()) continue;
      if (fields.size() != 3)
        throw ParseError("vocabulary line " + std::to_string(lineno) + ": expected 3 fields");
      std::size_t rank = 0;
      std::uint64_t freq = 0;
      try {
        rank = std::stoull(fields[0]);
        freq = std::stoull(fields[2]);
      } catch (const std::exception&) {
        throw ParseError("vocabulary line " + std::to_string(lineno) + ": bad number");
      }
      if (rank != v.tokens_.size())
        throw ParseError("vocabulary line " + std::to_string(lineno) + ": rank out of order");
      if (rank < kNumSpecials && fields[1] != kSpecialTokens[rank])
        throw ParseError("vocabulary line " + std::to_string(lineno) +
                         ": special tokens must occupy ranks 0-3");
      if (v.index_.count(fields[1]))
        throw ParseError("vocabulary line " + std::to_string(lineno) + ": duplicate token");
      v.add(fields[1], freq);
    }
    if (v.tokens_.size() < kNumSpecials) throw ParseError("vocabulary: missing special tokens");
    if (shortlist_size < kNumSpecials) throw InvalidArgument("vocabulary: shortlist size < 4");
    v.shortlist_size_ = std::min(shortlist_size, v.size());
    return v;
  }

  static Vocabulary read(const std::string& path, std::size_t shortlist_size) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open vocabulary file " + path);
    return read(in, shortlist_size);
  }

  static bool is_special(std::string_view tok) {
    return std::find(std::begin(kSpecialTokens), std::end(kSpecialTokens), tok) !=
           std::end(kSpecialTokens);
  }

 private:
  void reset_specials() {
    for (auto s : kSpecialTokens) add(std::string(s), 0);
    shortlist_size_ = kNumSpecials;
  }

  void add(const std::string& tok, std::uint64_t freq) {
    index_.emplace(tok, static_cast<WordId>(tokens_.size()));
    tokens_.push_back(tok);
    freqs_.push_back(freq);
  }

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, WordId> index_;
  std::size_t shortlist_size_ = kNumSpecials;
};

inline std::vector<WordId> map_tokens(const Sentence& sentence, const Vocabulary& vocab) {
  std::vector<WordId> ids;
  ids.reserve(sentence.size());
  for (const auto& tok : sentence) ids.push_back(vocab.id(tok));
  return ids;
}

// Fixed-order n-gram examples in flat storage: example i has context
// contexts[i*c .. i*c+c) with c = order - 1, and target targets[i].
class NGramDataset {
 public:
  NGramDataset() = default;
  explicit NGramDataset(int order) : order_(order) {
    if (order < 2) throw InvalidArgument("n-gram order must be >= 2");
  }

  int order() const { return order_; }
  std::size_t context_size() const { return static_cast<std::size_t>(order_ - 1); }
  std::size_t size() const { return targets_.size(); }
  bool empty() const { return targets_.empty(); }

  std::span<const WordId> context(std::size_t i) const {
    return {contexts_.data() + i * context_size(), context_size()};
  }
  WordId target(std::size_t i) const { return targets_[i]; }

  std::span<const WordId> contexts() const { return contexts_; }
  std::span<const WordId> targets() const { return targets_; }

  void push_back(std::span<const WordId> ctx, WordId target) {
    if (ctx.size() != context_size()) throw InvalidArgument("context length != order - 1");
    contexts_.insert(contexts_.end(), ctx.begin(), ctx.end());
    targets_.push_back(target);
  }

  void append(const NGramDataset& other) {
    if (other.empty()) return;
    if (other.order_ != order_) throw InvalidArgument("cannot append datasets of different order");
    contexts_.insert(contexts_.end(), other.contexts_.begin(), other.contexts_.end());
    targets_.insert(targets_.end(), other.targets_.begin(), other.targets_.end());
  }

  // Examples at `indices`, in that order.
  NGramDataset gather(std::span<const std::size_t> indices) const {
    NGramDataset out(order_);
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(context(i), target(i));
    return out;
  }

  void reserve(std::size_t n) {
    contexts_.reserve(n * context_size());
    targets_.reserve(n);
  }

  friend bool operator==(const NGramDataset&, const NGramDataset&) = default;

 private:
  int order_ = 2;
  std::vector<WordId> contexts_;
  std::vector<WordId> targets_;
};

// One example per position 0..T of a T-token sentence. Contexts are
// left-padded with <s>; the last target is </s>. Targets outside the
// short-list become <oos>; contexts keep full-vocabulary ids.
inline void extract_ngrams(std::span<const WordId> ids, int order, std::size_t shortlist_size,
                           NGramDataset& out) {
  if (order < 2) throw InvalidArgument("extract_ngrams: order must be >= 2");
  if (out.order() != order) throw InvalidArgument("extract_ngrams: dataset order mismatch");
  const std::size_t c = static_cast<std::size_t>(order - 1);
  std::vector<WordId> ctx(c, Vocabulary::kBos);
  for (std::size_t t = 0; t <= ids.size(); ++t) {
    WordId target = t < ids.size() ? ids[t] : Vocabulary::kEos;
    if (target < 0 || static_cast<std::size_t>(target) >= shortlist_size) target = Vocabulary::kOos;
    out.push_back(ctx, target);
    if (t < ids.size()) {
      std::rotate(ctx.begin(), ctx.begin() + 1, ctx.end());
      ctx.back() = ids[t];
    }
  }
}

inline NGramDataset extract_ngrams(std::span<const WordId> ids, int order,
                                   std::size_t shortlist_size) {
  NGramDataset out(order);
  extract_ngrams(ids, order, shortlist_size, out);
  return out;
}

inline NGramDataset make_dataset(const Corpus& corpus, const Vocabulary& vocab, int order) {
  NGramDataset out(order);
  for (const auto& sentence : corpus)
    extract_ngrams(map_tokens(sentence, vocab), order, vocab.shortlist_size(), out);
  return out;
}

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t in_shortlist = 0;
  double coverage = 0.0;
};

// Fraction of running word tokens whose type is in the short-list.
// Unknown words count as uncovered; sentence boundaries are not counted.
inline CorpusStats coverage(const Vocabulary& vocab, const Corpus& corpus) {
  CorpusStats st;
  for (const auto& sentence : corpus) {
    ++st.sentences;
    for (const auto& tok : sentence) {
      ++st.tokens;
      if (vocab.contains(tok) && vocab.in_shortlist(vocab.id(tok))) ++st.in_shortlist;
    }
  }
  if (st.tokens == 0) throw InvalidArgument("coverage: empty corpus");
  st.coverage = static_cast<double>(st.in_shortlist) / static_cast<double>(st.tokens);
  return st;
}

}  // namespace cslm
