#include <benchmark/benchmark.h>

#include <random>

#include "clir/dense.hpp"
#include "clir/lexical.hpp"
#include "clir/psq.hpp"
#include "test_support.hpp"

using namespace clir;

static void BM_MaxSim(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto q = test::random_query(1, 32, static_cast<std::uint32_t>(dim));
    const auto d = test::random_query(2, 180, static_cast<std::uint32_t>(dim));
    for (auto _ : state) benchmark::DoNotOptimize(maxsim(q, d));
    state.SetItemsProcessed(state.iterations() * 32 * 180);
}
BENCHMARK(BM_MaxSim)->Arg(32)->Arg(128);

static void BM_SearchDense(benchmark::State& state) {
    const auto set = test::random_corpus(3, static_cast<std::size_t>(state.range(0)), 64);
    DenseIndexParams p;
    p.num_centroids = 64;
    p.kmeans_iters = 5;
    const auto index = DenseIndex::build(set, p);
    p.nprobe = static_cast<std::uint32_t>(state.range(1));
    const auto q = test::random_query(4, 32, 64);
    for (auto _ : state) benchmark::DoNotOptimize(search_dense(index, q, p));
}
BENCHMARK(BM_SearchDense)->Args({2000, 1})->Args({2000, 4})->Args({2000, 16})->Unit(benchmark::kMillisecond);

static void BM_SearchLexical(benchmark::State& state) {
    std::mt19937_64 rng(5);
    const auto index = InvertedIndex::build(test::random_bags(rng, static_cast<std::size_t>(state.range(0)), 5000));
    const auto query = make_query(std::vector<std::string>{"t1", "t17", "t230", "t4000"});
    const auto scorer = state.range(1) ? LexicalScorer::Hmm : LexicalScorer::Bm25;
    for (auto _ : state) benchmark::DoNotOptimize(search_lexical(index, query, scorer, false, 1000));
}
BENCHMARK(BM_SearchLexical)->Args({20000, 0})->Args({20000, 1})->Unit(benchmark::kMicrosecond);

static void BM_TranslateDoc(benchmark::State& state) {
    std::mt19937_64 rng(6);
    std::vector<TranslationTable::Row> rows;
    for (int s = 0; s < 2000; ++s) {
        for (int a = 0; a < 16; ++a) rows.push_back({"s" + std::to_string(s), "t" + std::to_string((s * 7 + a * 251) % 4000), 1.0 / 17});
    }
    const auto table = TranslationTable::from_rows(rows);
    TokenCounts counts;
    for (int i = 0; i < 200; ++i) counts["s" + std::to_string(rng() % 2000)] += 1;
    for (auto _ : state) benchmark::DoNotOptimize(translate_doc(counts, table));
}
BENCHMARK(BM_TranslateDoc);
BENCHMARK_MAIN();
