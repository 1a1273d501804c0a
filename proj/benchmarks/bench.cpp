#include <benchmark/benchmark.h>

#include "morfo/corpus.hpp"
#include "morfo/features.hpp"
#include "morfo/network.hpp"
#include "morfo/rng.hpp"
#include "morfo/vectors.hpp"

using namespace morfo;

namespace {

std::vector<std::string> sample_words(std::size_t n) {
  const std::vector<std::string> cps = {"α", "β", "γ", "δ", "ε", "ζ", "η",
                                        "θ", "ι", "κ", "λ", "μ"};
  Rng rng(42);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    const std::size_t len = 3 + rng.next_below(8);
    for (std::size_t k = 0; k < len; ++k) w += cps[rng.next_below(cps.size())];
    out.push_back(std::move(w));
  }
  return out;
}

void BM_HashRow(benchmark::State& state) {
  const auto words = sample_words(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hash_row(words[i++ & 1023], 1ull << 16, 1));
  }
}
BENCHMARK(BM_HashRow);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto words = sample_words(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_features(words[i++ & 1023]));
  }
}
BENCHMARK(BM_ExtractFeatures);

void BM_CharNgrams(benchmark::State& state) {
  const auto words = sample_words(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(char_ngrams(words[i++ & 1023], 3, 6));
  }
}
BENCHMARK(BM_CharNgrams);

void BM_SynthesizeOov(benchmark::State& state) {
  const auto words = sample_words(256);
  VectorTable table;
  table.dim = 32;
  Rng rng(7);
  for (const auto& w : words) {
    std::vector<double> v(table.dim);
    for (double& x : v) x = rng.next_range(-1, 1);
    table.entries[w] = std::move(v);
  }
  const SubwordTable sub = induce_subword_table(table, 10000, 0);
  const auto queries = sample_words(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize_oov_vector(queries[i++ & 1023], sub));
  }
}
BENCHMARK(BM_SynthesizeOov);

void BM_ForwardSentence(benchmark::State& state) {
  ModelConfig cfg;
  cfg.width = static_cast<std::size_t>(state.range(0));
  cfg.depth = 2;
  cfg.attn_window = 2;
  cfg.n_tags = 30;
  cfg.norm_rows = 3000;
  cfg.norm_dim = 32;
  cfg.affix_rows = 500;
  cfg.affix_dim = 12;
  std::vector<TrainItem> batch;
  const PipelineModel model = make_gradcheck_model(cfg, 1, batch);
  Sentence s;
  for (const std::string& w : sample_words(20))
    s.tokens.push_back(Token{w, "", "", {}, "O"});
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_probs(model, s));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(s.tokens.size()));
}
BENCHMARK(BM_ForwardSentence)->Arg(32)->Arg(64)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.width = 48;
  cfg.depth = 2;
  cfg.attn_window = 2;
  cfg.n_tags = 10;
  cfg.norm_rows = 3000;
  cfg.norm_dim = 32;
  cfg.affix_rows = 500;
  cfg.affix_dim = 12;
  std::vector<TrainItem> batch;
  PipelineModel model = make_gradcheck_model(cfg, 1, batch);
  std::vector<const TrainItem*> ptrs;
  for (const auto& it : batch) ptrs.push_back(&it);
  Gradients grads = make_gradients(model);
  Rng rng(0);
  for (auto _ : state) {
    grads.zero();
    benchmark::DoNotOptimize(
        loss_and_gradients(model, ptrs, 0.5, rng, grads));
    optimizer_step(model, grads, 0.001);
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
