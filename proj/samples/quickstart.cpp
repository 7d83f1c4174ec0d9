// samples/quickstart.cpp

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

// Trains a small network on a toy generic corpus, adapts it to a toy
// in-domain corpus both ways, and prints perplexities.
//
//   ./quickstart [model-path]

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "cslm/cslm.hpp"

using namespace cslm;

namespace {

Corpus toy(const char* const* lines, std::size_t n, int repeat) {
  Corpus c;
  for (int r = 0; r < repeat; ++r)
    for (std::size_t i = 0; i < n; ++i) c.push_back(split_tokens(lines[i]));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const char* generic_lines[] = {
      "the court heard the case", "the case was closed", "a judge heard the appeal",
      "the appeal was dismissed", "the parties signed the contract", "a contract was signed"};
  const char* domain_lines[] = {"the patent was granted", "a patent claim was filed",
                                "the claim was granted"};
  const Corpus generic = toy(generic_lines, 6, 40);
  const Corpus domain = toy(domain_lines, 3, 10);

  Corpus all = generic;
  all.insert(all.end(), domain.begin(), domain.end());
  const Vocabulary vocab = Vocabulary::build(all, 1000, 1000);

  NetworkConfig cfg;
  cfg.order = 3;
  cfg.projection = 8;
  cfg.hidden = {16, 16};
  cfg.vocab_size = static_cast<int>(vocab.size());
  cfg.shortlist = static_cast<int>(vocab.shortlist_size());
  cfg.batch_size = 16;

  auto g = std::make_shared<const NGramDataset>(make_dataset(generic, vocab, cfg.order));
  auto a = std::make_shared<const NGramDataset>(make_dataset(domain, vocab, cfg.order));

  Model<float> base = init_network<float>(cfg);
  train(base, *g, LrSchedule{0.2, 0.9}, 10, 1);
  std::printf("base       generic ppl %.3f  in-domain ppl %.3f\n", perplexity(base, *g).ppl,
              perplexity(base, *a).ppl);

  const ResamplePlan plan = build_resample_plan(a, g, 0.25, 1);
  AdaptOptions opt;
  opt.epochs = 20;
  opt.schedule = {0.1, 0.97};
  const Model<float> cont = adapt_model(base, plan, opt);
  std::printf("continued  generic ppl %.3f  in-domain ppl %.3f\n", perplexity(cont, *g).ppl,
              perplexity(cont, *a).ppl);

  opt.method = AdaptMethod::kLayer;
  const Model<float> layer = adapt_model(base, plan, opt);
  std::printf("layer      generic ppl %.3f  in-domain ppl %.3f\n", perplexity(layer, *g).ppl,
              perplexity(layer, *a).ppl);

  const std::string path = argc > 1 ? std::string(argv[1])
                                    : (std::filesystem::temp_directory_path() / "quickstart.cslm").string();
  save_model(layer, path);
  const Model<float> back = load_model(path);
  std::printf("reloaded model has %zu layers\n", back.num_layers());
  return 0;
}
