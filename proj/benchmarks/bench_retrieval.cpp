#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "kgval/retrieval.hpp"

using namespace kgval;

namespace {

const char* const kWords[] = {"team",  "hockey", "river",  "capital", "novel", "award",
                              "season", "league", "physics", "born",    "city",  "writer"};

std::string random_text(std::mt19937& rng, std::size_t words) {
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kWords) - 1);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += (i % 40 == 0) ? "\n\n" : (i % 12 == 0 ? ". " : " ");
        out += kWords[pick(rng)];
    }
    return out;
}

std::vector<Document> corpus(std::size_t docs, std::size_t words) {
    std::mt19937 rng(7);
    std::vector<Document> out;
    for (std::size_t i = 0; i < docs; ++i) {
        out.push_back({"doc-" + std::to_string(i), random_text(rng, words), OriginKind::Corpus});
    }
    return out;
}

void BM_ChunkDocument(benchmark::State& state) {
    std::mt19937 rng(1);
    const Document doc{"d", random_text(rng, static_cast<std::size_t>(state.range(0))),
                       OriginKind::None};
    ChunkingConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(chunk_document(doc, cfg));
    state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(doc.body.size()));
}
BENCHMARK(BM_ChunkDocument)->Arg(1'000)->Arg(20'000);

void BM_HashEmbedding(benchmark::State& state) {
    std::mt19937 rng(2);
    std::vector<std::string> texts;
    for (int i = 0; i < 64; ++i) texts.push_back(random_text(rng, 150));
    HashEmbeddingProvider provider(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(provider.embed_batch(texts));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(texts.size()));
}
BENCHMARK(BM_HashEmbedding)->Arg(64)->Arg(384);

void BM_TopK(benchmark::State& state) {
    HashEmbeddingProvider provider(64);
    const auto index =
        CorpusIndex::build(corpus(static_cast<std::size_t>(state.range(0)), 400), {}, provider);
    const auto query = provider.embed_batch({"hockey team league season"}).front();
    for (auto _ : state) benchmark::DoNotOptimize(index.top_k_indices(query, 5));
    state.counters["chunks"] = static_cast<double>(index.size());
}
BENCHMARK(BM_TopK)->Arg(50)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
