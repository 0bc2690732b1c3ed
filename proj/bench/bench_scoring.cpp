// Serial reference vs OpenMP scoring kernel over random corpora.

#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "gandr/kernels.hpp"
#include "gandr/tfidf.hpp"

namespace {

struct Corpus {
  gandr::TfidfIndex index;
  std::vector<gandr::SparseVector> queries;
};

// Zipf-ish term draws, 8-20 tokens per document.
const Corpus& corpus(std::size_t docs) {
  static std::map<std::size_t, Corpus> cache;
  auto it = cache.find(docs);
  if (it != cache.end()) return it->second;
  std::mt19937_64 gen(docs);
  std::uniform_int_distribution<int> len(8, 20);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto term = [&] { return "t" + std::to_string(static_cast<int>(5000 * u(gen) * u(gen))); };
  std::vector<std::vector<std::string>> text(docs);
  for (auto& d : text) {
    for (int i = len(gen); i > 0; --i) d.push_back(term());
  }
  Corpus c{gandr::TfidfIndex::build(text), {}};
  for (int q = 0; q < 64; ++q) {
    std::vector<std::string> tokens;
    for (int i = len(gen); i > 0; --i) tokens.push_back(term());
    c.queries.push_back(c.index.vectorize(tokens));
  }
  return cache.emplace(docs, std::move(c)).first->second;
}

template <void (*Kernel)(const gandr::TfidfIndex&, const gandr::SparseVector&, std::span<double>)>
void BM_score(benchmark::State& state) {
  const auto& c = corpus(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(c.index.num_documents());
  std::size_t q = 0;
  for (auto _ : state) {
    Kernel(c.index, c.queries[q++ % c.queries.size()], out);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

}  // namespace

BENCHMARK(BM_score<gandr::kernels::score_serial>)->Name("score_serial")->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_score<gandr::kernels::score_parallel>)->Name("score_parallel")->RangeMultiplier(10)->Range(1000, 100000);

BENCHMARK_MAIN();
