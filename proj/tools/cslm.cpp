// tools/cslm.cpp

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

// Command-line front end: cslm <subcommand> [--option value ...]
//
// Every subcommand that writes a file also writes <out>.manifest with the
// full option set (key=value). `--manifest FILE` replays one; options given
// on the command line after it win. Exit status: 0 ok, 1 runtime or data
// error, 2 usage error.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cslm/cslm.hpp"

namespace {

using namespace cslm;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown for option values CLI11 validators cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("--") + what + ": bad integer '" + item + "'");
    }
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    double v = 0.0;
    if (!detail::parse_double(item, v))
      throw UsageError(std::string("--") + what + ": bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

const CLI::Validator kOpenShare(
    [](std::string& s) -> std::string {
      double v = 0.0;
      if (!detail::parse_double(s, v) || !(v > 0.0 && v < 1.0))
        return "share must be strictly between 0 and 1, got " + s;
      return {};
    },
    "SHARE in (0,1)");

const CLI::Validator kLayerPos(
    [](std::string& s) -> std::string {
      if (s == "last") return {};
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        return "layer position must be a non-negative integer or 'last'";
      return {};
    },
    "INT|last");

// ---------------------------------------------------------------------------
// Manifests

void write_manifest(const CLI::App& sub, const std::string& out_path) {
  write_file_atomic(out_path + ".manifest", [&](std::ostream& os) {
    os << "command=" << sub.get_name() << '\n';
    for (const CLI::Option* opt : sub.get_options()) {
      const auto& names = opt->get_lnames();
      if (names.empty() || names[0] == "help" || names[0] == "manifest" || names[0] == "plan") continue;
      std::string value;
      if (opt->get_type_size() == 0) {
        value = opt->count() ? "true" : "false";
      } else if (opt->count()) {
        const auto& r = opt->reduced_results();
        for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
      } else {
        value = opt->get_default_str();
        if (value.empty()) continue;
      }
      os << names[0] << '=' << value << '\n';
    }
  });
}

// Expands `--manifest FILE` and, for adapt, `--plan FILE` into options
// placed before the remaining command-line options.
std::vector<std::string> expand_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2) return args;
  std::vector<std::string> head(args.begin(), args.begin() + 2);
  std::vector<std::string> injected, rest;

  auto take_value = [&](std::size_t& i, const std::string& flag) -> std::string {
    const std::string& a = args[i];
    if (a.size() > flag.size() && a[flag.size()] == '=') return a.substr(flag.size() + 1);
    if (i + 1 >= args.size()) throw UsageError(flag + " requires a file argument");
    return args[++i];
  };
  auto is_flag = [](const std::string& a, const std::string& flag) {
    return a == flag || (a.rfind(flag + "=", 0) == 0);
  };

  for (std::size_t i = 2; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (is_flag(a, "--manifest")) {
      const std::string path = take_value(i, "--manifest");
      std::map<std::string, std::string> kv;
      try {
        kv = read_key_values(path);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      auto cmd = kv.find("command");
      if (cmd != kv.end()) {
        if (cmd->second != args[1])
          throw UsageError("manifest " + path + " is for '" + cmd->second + "', not '" + args[1] + "'");
        kv.erase(cmd);
      }
      for (const auto& [k, v] : kv) injected.push_back("--" + k + "=" + v);
    } else if (args[1] == "adapt" && is_flag(a, "--plan")) {
      const std::string path = take_value(i, "--plan");
      std::map<std::string, std::string> kv;
      try {
        kv = read_key_values(path);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      static const std::map<std::string, std::string> keymap = {
          {"adaptation_path", "adapt-corpus"}, {"generic_path", "generic-corpus"},
          {"share", "share"}, {"seed", "seed"}, {"mode", "sampling"}};
      for (const auto& [k, v] : kv) {
        auto it = keymap.find(k);
        if (it == keymap.end()) throw UsageError("plan " + path + ": unknown key '" + k + "'");
        injected.push_back("--" + it->second + "=" + v);
      }
    } else {
      rest.push_back(a);
    }
  }
  // Options given explicitly replace injected ones (list options included).
  std::set<std::string> explicit_keys;
  for (const auto& a : rest)
    if (a.rfind("--", 0) == 0) explicit_keys.insert(a.substr(0, a.find('=')));
  for (const auto& a : injected)
    if (!explicit_keys.count(a.substr(0, a.find('=')))) head.push_back(a);
  head.insert(head.end(), rest.begin(), rest.end());
  return head;
}

// ---------------------------------------------------------------------------
// Shared helpers

Model<float> load_checked(const std::string& path) { return load_model<float>(path); }

Vocabulary vocab_for(const Model<float>& m, const std::string& path) {
  Vocabulary v = Vocabulary::read(path, static_cast<std::size_t>(m.shortlist()));
  if (v.size() != static_cast<std::size_t>(m.vocab_size()))
    throw Error("vocabulary " + path + " has " + std::to_string(v.size()) +
                " entries, the model expects " + std::to_string(m.vocab_size()));
  return v;
}

NGramDataset load_dataset(const std::string& path, const Vocabulary& v, int order) {
  return make_dataset(read_corpus(path), v, order);
}

std::vector<std::vector<Sentence>> read_references(const std::vector<std::string>& paths,
                                                   const NBestList& list) {
  std::vector<std::vector<Sentence>> per_file;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw Error("cannot open reference file " + p);
    std::vector<Sentence> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(split_tokens(line));
    per_file.push_back(std::move(lines));
  }
  // References are indexed by source id.
  std::vector<std::vector<Sentence>> refs;
  for (const auto& g : list.groups) {
    std::vector<Sentence> r;
    for (std::size_t f = 0; f < per_file.size(); ++f) {
      if (g.source_id >= per_file[f].size())
        throw Error("reference file " + paths[f] + " has no line for source id " +
                    std::to_string(g.source_id));
      r.push_back(per_file[f][g.source_id]);
    }
    refs.push_back(std::move(r));
  }
  return refs;
}

std::string join(const Sentence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + s[i];
  return out;
}

std::size_t layer_position(const std::string& s) {
  return s == "last" ? std::numeric_limits<std::size_t>::max() : std::stoull(s);
}

// ---------------------------------------------------------------------------
// Subcommands

struct BuildVocabArgs {
  std::string corpus, out;
  std::size_t shortlist = 32000;
  std::size_t max_vocab = 0;
};

void setup_build_vocab(CLI::App& app, BuildVocabArgs& a) {
  auto* s = app.add_subcommand("build-vocab", "Build a frequency-ranked vocabulary");
  s->add_option("--corpus", a.corpus, "Training corpus, one sentence per line")
      ->required()->check(CLI::ExistingFile);
  s->add_option("--out", a.out, "Output vocabulary file")->required();
  s->add_option("--shortlist", a.shortlist, "Short-list size, specials included")
      ->check(CLI::Range(std::size_t{4}, std::numeric_limits<std::size_t>::max()));
  s->add_option("--max-vocab", a.max_vocab, "Maximum vocabulary size, 0 = unlimited");
}

int run_build_vocab(const CLI::App& sub, const BuildVocabArgs& a) {
  const Corpus corpus = read_corpus(a.corpus);
  const std::size_t max_vocab =
      a.max_vocab ? a.max_vocab : std::numeric_limits<std::size_t>::max();
  if (a.shortlist > max_vocab) throw UsageError("--shortlist exceeds --max-vocab");
  const Vocabulary v = Vocabulary::build(corpus, max_vocab, a.shortlist);
  const CorpusStats st = coverage(v, corpus);
  write_file_atomic(a.out, [&](std::ostream& os) { v.write(os); });
  write_manifest(sub, a.out);
  std::printf("coverage=%.4f tokens=%zu sentences=%zu\n", st.coverage, st.tokens, st.sentences);
  return 0;
}

struct TrainArgs {
  std::string corpus, vocab, out, dev, report;
  int order = 28, proj = 320, batch = 128, epochs = 10;
  std::string hidden = "1024,1024,1024", activation = "tanh";
  std::size_t shortlist = 32000;
  double lr = 0.06, decay = 0.9;
  std::uint64_t seed = 1;
};

void setup_train(CLI::App& app, TrainArgs& a) {
  auto* s = app.add_subcommand("train", "Train a network from scratch");
  s->add_option("--corpus", a.corpus, "Training corpus")->required()->check(CLI::ExistingFile);
  s->add_option("--vocab", a.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  s->add_option("--out", a.out, "Output model file")->required();
  s->add_option("--dev", a.dev, "Held-out corpus evaluated after each epoch")->check(CLI::ExistingFile);
  s->add_option("--report", a.report, "Per-epoch report (default <out>.report)");
  s->add_option("--order", a.order, "N-gram order")->check(CLI::Range(2, 1000));
  s->add_option("--proj", a.proj, "Projection dimension")->check(CLI::PositiveNumber);
  s->add_option("--hidden", a.hidden, "Hidden layer sizes, comma separated");
  s->add_option("--activation", a.activation, "Hidden activation(s): tanh|linear, comma separated");
  s->add_option("--shortlist", a.shortlist, "Short-list size")->check(CLI::PositiveNumber);
  s->add_option("--batch", a.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  s->add_option("--epochs", a.epochs, "Training epochs")->check(CLI::PositiveNumber);
  s->add_option("--lr", a.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  s->add_option("--decay", a.decay, "Learning-rate decay per epoch")
      ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
  s->add_option("--seed", a.seed, "Random seed");
}

int run_train(const CLI::App& sub, const TrainArgs& a) {
  NetworkConfig cfg;
  cfg.order = a.order;
  cfg.projection = a.proj;
  cfg.hidden = parse_int_list(a.hidden, "hidden");
  if (cfg.hidden.empty()) throw UsageError("--hidden: at least one layer required");
  const auto acts = split_list(a.activation);
  if (acts.size() != 1 && acts.size() != cfg.hidden.size())
    throw UsageError("--activation: give one value or one per hidden layer");
  try {
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i)
      cfg.activations.push_back(parse_activation(acts.size() == 1 ? acts[0] : acts[i]));
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--activation: ") + e.what());
  }
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;

  const Vocabulary vocab = Vocabulary::read(a.vocab, a.shortlist);
  cfg.vocab_size = static_cast<int>(vocab.size());
  cfg.shortlist = static_cast<int>(vocab.shortlist_size());
  const NGramDataset data = load_dataset(a.corpus, vocab, cfg.order);
  std::unique_ptr<NGramDataset> dev;
  if (!a.dev.empty()) dev = std::make_unique<NGramDataset>(load_dataset(a.dev, vocab, cfg.order));

  Model<float> model = init_network<float>(cfg);
  std::ostringstream report;
  report << "epoch\trate\ttrain_nll\tdev_ppl\n";
  train(model, data, LrSchedule{a.lr, a.decay}, a.epochs, a.seed + 1, [&](const EpochStats& e) {
    report << e.epoch << '\t' << e.rate << '\t' << e.mean_nll << '\t';
    if (dev)
      report << perplexity(model, *dev).ppl;
    else
      report << '-';
    report << '\n';
    std::fprintf(stderr, "epoch %llu nll %.4f (%.1fs)\n",
                 static_cast<unsigned long long>(e.epoch), e.mean_nll, e.seconds);
  });
  save_model(model, a.out);
  write_file_atomic(a.report.empty() ? a.out + ".report" : a.report,
                    [&](std::ostream& os) { os << report.str(); });
  write_manifest(sub, a.out);
  return 0;
}

struct AdaptArgs {
  std::string model, vocab, adapt_corpus, generic_corpus, out, dev, indomain, report;
  std::string method = "continued", layer_pos = "last", activation = "tanh", sampling = "bernoulli";
  double share = 0.14;
  std::uint64_t seed = 1;
  int epochs = 50;
  double lr = 0.0005, decay = 0.97;
};

void add_method_options(CLI::App* s, std::string& method, std::string& layer_pos,
                        std::string& activation) {
  s->add_option("--method", method, "continued|layer")
      ->check(CLI::IsMember({"continued", "layer"}));
  s->add_option("--layer-pos", layer_pos, "Adaptation layer position (index or 'last')")
      ->check(kLayerPos);
  s->add_option("--activation", activation, "Adaptation layer activation: tanh|linear")
      ->check(CLI::IsMember({"tanh", "linear"}));
}

void setup_adapt(CLI::App& app, AdaptArgs& a) {
  auto* s = app.add_subcommand("adapt", "Adapt a trained network to in-domain data");
  s->add_option("--plan", "Plan file (adaptation_path, generic_path, share, seed, mode)");
  s->add_option("--model", a.model, "Base model")->required()->check(CLI::ExistingFile);
  s->add_option("--vocab", a.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  s->add_option("--adapt-corpus", a.adapt_corpus, "Adaptation corpus")
      ->required()->check(CLI::ExistingFile);
  s->add_option("--generic-corpus", a.generic_corpus, "Generic corpus")
      ->required()->check(CLI::ExistingFile);
  s->add_option("--out", a.out, "Output model file")->required();
  s->add_option("--dev", a.dev, "Generic held-out corpus")->check(CLI::ExistingFile);
  s->add_option("--indomain", a.indomain, "In-domain held-out corpus")->check(CLI::ExistingFile);
  s->add_option("--report", a.report, "Adaptation report (default <out>.report)");
  add_method_options(s, a.method, a.layer_pos, a.activation);
  s->add_option("--share", a.share, "Target adaptation-data share per epoch")->check(kOpenShare);
  s->add_option("--sampling", a.sampling, "Generic sampling: bernoulli|fixed")
      ->check(CLI::IsMember({"bernoulli", "fixed"}));
  s->add_option("--seed", a.seed, "Random seed");
  s->add_option("--epochs", a.epochs, "Adaptation epochs")->check(CLI::PositiveNumber);
  s->add_option("--lr", a.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  s->add_option("--decay", a.decay, "Learning-rate decay per epoch")
      ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
}

AdaptOptions adapt_options(const std::string& method, const std::string& layer_pos,
                           const std::string& activation, int epochs, double lr, double decay) {
  AdaptOptions o;
  o.method = parse_adapt_method(method);
  o.layer_position = layer_position(layer_pos);
  o.layer_activation = parse_activation(activation);
  o.epochs = epochs;
  o.schedule = {lr, decay};
  return o;
}

int run_adapt(const CLI::App& sub, const AdaptArgs& a) {
  const Model<float> base = load_checked(a.model);
  const Vocabulary vocab = vocab_for(base, a.vocab);
  const int n = base.order();
  auto adapt = std::make_shared<const NGramDataset>(load_dataset(a.adapt_corpus, vocab, n));
  auto generic = std::make_shared<const NGramDataset>(load_dataset(a.generic_corpus, vocab, n));
  std::unique_ptr<NGramDataset> dev, indomain;
  if (!a.dev.empty()) dev = std::make_unique<NGramDataset>(load_dataset(a.dev, vocab, n));
  if (!a.indomain.empty())
    indomain = std::make_unique<NGramDataset>(load_dataset(a.indomain, vocab, n));

  const AdaptOptions opt = adapt_options(a.method, a.layer_pos, a.activation, a.epochs, a.lr, a.decay);
  if (opt.method == AdaptMethod::kLayer && opt.layer_position != std::numeric_limits<std::size_t>::max() &&
      opt.layer_position >= base.num_layers())
    throw UsageError("--layer-pos: model has " + std::to_string(base.num_layers()) + " layers");
  const ResamplePlan plan =
      build_resample_plan(adapt, generic, a.share, a.seed, parse_sampling_mode(a.sampling));
  if (plan.clamped)
    std::fprintf(stderr, "warning: generic pool too small for share %.4f; using all of it\n", a.share);

  AdaptReport report;
  const Model<float> adapted = adapt_model(base, plan, opt, &report, AdaptEval{dev.get(), indomain.get()},
                                           [](const AdaptEpochRow& r) {
                                             std::fprintf(stderr, "epoch %llu nll %.4f size %zu\n",
                                                          static_cast<unsigned long long>(r.epoch),
                                                          r.train_nll, r.epoch_size);
                                           });
  save_model(adapted, a.out);
  write_file_atomic(a.report.empty() ? a.out + ".report" : a.report,
                    [&](std::ostream& os) { report.write_tsv(os); });
  write_manifest(sub, a.out);
  std::fprintf(stderr, "adapted in %.1fs\n", report.seconds);
  return 0;
}

struct PplArgs {
  std::string model, vocab, corpus;
};

void setup_ppl(CLI::App& app, PplArgs& a) {
  auto* s = app.add_subcommand("ppl", "Perplexity of a corpus");
  s->add_option("--model", a.model, "Model file")->required()->check(CLI::ExistingFile);
  s->add_option("--vocab", a.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  s->add_option("--corpus", a.corpus, "Corpus")->required()->check(CLI::ExistingFile);
}

int run_ppl(const PplArgs& a) {
  const Model<float> m = load_checked(a.model);
  const Vocabulary v = vocab_for(m, a.vocab);
  const PerplexityResult r = perplexity(m, load_dataset(a.corpus, v, m.order()));
  std::printf("ppl=%.4f oos=%.4f n=%zu\n", r.ppl, r.oos_fraction, r.scored);
  return 0;
}

struct RescoreArgs {
  std::string nbest, model, vocab, weights, out, nbest_out, bleu_report;
  std::vector<std::string> refs;
  bool smooth = false;
};

void setup_rescore(CLI::App& app, RescoreArgs& a) {
  auto* s = app.add_subcommand("rescore", "Add the network feature to an n-best list and rerank");
  s->add_option("--nbest", a.nbest, "Input n-best list")->required()->check(CLI::ExistingFile);
  s->add_option("--model", a.model, "Model file")->required()->check(CLI::ExistingFile);
  s->add_option("--vocab", a.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  s->add_option("--weights", a.weights, "Weights file, one per feature, network feature last")
      ->required()->check(CLI::ExistingFile);
  s->add_option("--out", a.out, "Output 1-best file")->required();
  s->add_option("--nbest-out", a.nbest_out, "Also write the n-best list with the new feature");
  s->add_option("--refs", a.refs, "Reference files, one line per source id")
      ->delimiter(',')->check(CLI::ExistingFile);
  s->add_option("--bleu-report", a.bleu_report, "BLEU report (default <out>.bleu)");
  s->add_flag("--smooth", a.smooth, "Add-one smoothing for orders >= 2");
}

int run_rescore(const CLI::App& sub, const RescoreArgs& a) {
  const Model<float> m = load_checked(a.model);
  const Vocabulary v = vocab_for(m, a.vocab);
  NBestList list = parse_nbest(a.nbest);
  const FeatureWeights w = read_weights(a.weights);
  add_cslm_feature(list, m, v);
  const auto best = rerank(list, w);
  std::vector<Sentence> picked;
  for (std::size_t g = 0; g < list.groups.size(); ++g)
    picked.push_back(list.groups[g].hypotheses[best[g]].tokens);

  std::vector<std::vector<Sentence>> refs;
  if (!a.refs.empty()) refs = read_references(a.refs, list);

  write_file_atomic(a.out, [&](std::ostream& os) {
    for (const auto& s : picked) os << join(s) << '\n';
  });
  if (!a.nbest_out.empty())
    write_file_atomic(a.nbest_out, [&](std::ostream& os) { write_nbest(os, list); });
  if (!refs.empty()) {
    const BleuResult r = corpus_bleu(picked, refs, kBleuMaxOrder, a.smooth);
    write_file_atomic(a.bleu_report.empty() ? a.out + ".bleu" : a.bleu_report,
                      [&](std::ostream& os) { r.write_report(os); });
    std::printf("bleu=%.4f\n", r.bleu);
  }
  write_manifest(sub, a.out);
  return 0;
}

struct TuneArgs {
  std::string nbest, model, vocab, out;
  std::vector<std::string> refs;
  int restarts = 5;
  std::uint64_t seed = 1;
  bool smooth = false;
};

void setup_tune(CLI::App& app, TuneArgs& a) {
  auto* s = app.add_subcommand("tune", "Tune log-linear weights on a dev n-best list");
  s->add_option("--nbest", a.nbest, "Dev n-best list")->required()->check(CLI::ExistingFile);
  s->add_option("--refs", a.refs, "Reference files, one line per source id")
      ->required()->delimiter(',')->check(CLI::ExistingFile);
  s->add_option("--model", a.model, "Model file; appends the network feature")
      ->check(CLI::ExistingFile);
  s->add_option("--vocab", a.vocab, "Vocabulary file (with --model)")->check(CLI::ExistingFile);
  s->add_option("--out", a.out, "Output weights file")->required();
  s->add_option("--restarts", a.restarts, "Random restarts")->check(CLI::NonNegativeNumber);
  s->add_option("--seed", a.seed, "Random seed");
  s->add_flag("--smooth", a.smooth, "Add-one smoothing for orders >= 2");
}

int run_tune(const CLI::App& sub, const TuneArgs& a) {
  if (a.model.empty() != a.vocab.empty()) throw UsageError("--model and --vocab go together");
  NBestList list = parse_nbest(a.nbest);
  if (!a.model.empty()) {
    const Model<float> m = load_checked(a.model);
    add_cslm_feature(list, m, vocab_for(m, a.vocab));
  }
  const auto refs = read_references(a.refs, list);
  TuneOptions opt;
  opt.restarts = a.restarts;
  opt.seed = a.seed;
  opt.smooth = a.smooth;
  const TuneResult r = tune_weights(list, refs, opt);
  write_file_atomic(a.out, [&](std::ostream& os) { write_weights(os, r.weights); });
  write_manifest(sub, a.out);
  std::printf("bleu=%.4f baseline=%.4f\n", r.bleu, r.baseline_bleu);
  return 0;
}

struct DaysArgs {
  std::string model, vocab, generic_corpus, out;
  std::vector<std::string> days;
  std::string method = "continued", layer_pos = "last", activation = "tanh";
  std::string mode = "fixed-generic", sampling = "bernoulli", shares;
  double generic_count = 0.0, day1_share = 0.39;
  int epochs = 50;
  double lr = 0.0005, decay = 0.97;
  std::uint64_t seed = 1;
};

void setup_days(CLI::App& app, DaysArgs& a) {
  auto* s = app.add_subcommand("simulate-days", "Adapt day by day, evaluate on the next day");
  s->add_option("--model", a.model, "Base model")->required()->check(CLI::ExistingFile);
  s->add_option("--vocab", a.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  s->add_option("--days", a.days, "Day corpora in order, comma separated")
      ->required()->delimiter(',')->check(CLI::ExistingFile);
  s->add_option("--generic-corpus", a.generic_corpus, "Generic corpus")
      ->required()->check(CLI::ExistingFile);
  s->add_option("--out", a.out, "Output table")->required();
  add_method_options(s, a.method, a.layer_pos, a.activation);
  s->add_option("--mode", a.mode, "fixed-generic|share")
      ->check(CLI::IsMember({"fixed-generic", "share"}));
  s->add_option("--generic-count", a.generic_count,
                "fixed-generic: expected generic draw per epoch (0 = from --day1-share)")
      ->check(CLI::NonNegativeNumber);
  s->add_option("--day1-share", a.day1_share, "fixed-generic: day-1 share defining the draw")
      ->check(kOpenShare);
  s->add_option("--shares", a.shares, "share: one share, or one per day, comma separated");
  s->add_option("--sampling", a.sampling, "Generic sampling: bernoulli|fixed")
      ->check(CLI::IsMember({"bernoulli", "fixed"}));
  s->add_option("--epochs", a.epochs, "Adaptation epochs")->check(CLI::PositiveNumber);
  s->add_option("--lr", a.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  s->add_option("--decay", a.decay, "Learning-rate decay per epoch")
      ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
  s->add_option("--seed", a.seed, "Random seed");
}

int run_days(const CLI::App& sub, const DaysArgs& a) {
  if (a.days.size() < 2) throw UsageError("--days: need at least two day corpora");
  const Model<float> base = load_checked(a.model);
  const Vocabulary vocab = vocab_for(base, a.vocab);
  const int n = base.order();
  std::vector<NGramDataset> days;
  for (const auto& p : a.days) days.push_back(load_dataset(p, vocab, n));
  auto generic = std::make_shared<const NGramDataset>(load_dataset(a.generic_corpus, vocab, n));

  DayScheduleOptions so;
  so.seed = a.seed;
  so.sampling = parse_sampling_mode(a.sampling);
  if (a.mode == "share") {
    so.mode = DayMode::kShare;
    so.shares = parse_double_list(a.shares, "shares");
    for (double p : so.shares)
      if (!(p > 0.0 && p < 1.0)) throw UsageError("--shares: values must be in (0,1)");
    if (so.shares.size() != 1 && so.shares.size() != days.size())
      throw UsageError("--shares: give one share or one per day");
  } else {
    so.mode = DayMode::kFixedGeneric;
    const double a1 = static_cast<double>(days.front().size());
    so.generic_count = a.generic_count > 0.0 ? a.generic_count : a1 * (1.0 - a.day1_share) / a.day1_share;
  }
  const DaySchedule schedule = build_day_schedule(days, generic, so);
  const AdaptOptions opt = adapt_options(a.method, a.layer_pos, a.activation, a.epochs, a.lr, a.decay);
  const auto results = simulate_days(base, days, schedule, opt);

  write_file_atomic(a.out, [&](std::ostream& os) {
    os << "eval_day\tadapted_on\tbaseline_ppl\tadapted_ppl\trelative_reduction\n";
    const auto prec = os.precision(6);
    for (const auto& r : results)
      os << r.eval_day << "\t1-" << r.adapted_on << '\t' << r.baseline_ppl << '\t' << r.adapted_ppl
         << '\t' << r.relative_reduction() << '\n';
    os.precision(prec);
  });
  write_file_atomic(a.out + ".shares", [&](std::ostream& os) { schedule.write_table(os); });
  write_manifest(sub, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-space language model training, adaptation and rescoring"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  BuildVocabArgs bv;
  TrainArgs tr;
  AdaptArgs ad;
  PplArgs pp;
  RescoreArgs rs;
  TuneArgs tu;
  DaysArgs dy;
  setup_build_vocab(app, bv);
  setup_train(app, tr);
  setup_adapt(app, ad);
  setup_ppl(app, pp);
  setup_rescore(app, rs);
  setup_tune(app, tu);
  setup_days(app, dy);
  const auto all = [](CLI::App*) { return true; };
  for (CLI::App* s : app.get_subcommands(all)) {
    s->add_option("--manifest", "Replay options from a manifest file")->check(CLI::ExistingFile);
    for (CLI::Option* o : s->get_options())
      if (o->get_type_size() != 0 && o->get_expected_max() <= 1)
        o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  try {
    std::vector<std::string> args = expand_args(argc, argv);
    std::reverse(args.begin(), args.end());
    args.pop_back();  // program name
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "build-vocab") return run_build_vocab(*sub, bv);
    if (name == "train") return run_train(*sub, tr);
    if (name == "adapt") return run_adapt(*sub, ad);
    if (name == "ppl") return run_ppl(pp);
    if (name == "rescore") return run_rescore(*sub, rs);
    if (name == "tune") return run_tune(*sub, tu);
    if (name == "simulate-days") return run_days(*sub, dy);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
