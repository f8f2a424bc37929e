#include <benchmark/benchmark.h>

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mtkit/bpe.hpp"
#include "mtkit/sampling.hpp"
#include "mtkit/text.hpp"

namespace {

// Pseudo-word corpus from a fixed pool, mirroring the shape of natural text
// closely enough for merge-table pressure.
std::vector<std::string> make_corpus(std::size_t sentences, char32_t lo, char32_t hi,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<char32_t> cp(lo, hi);
  std::uniform_int_distribution<std::size_t> word_len(2, 7);
  std::vector<std::string> pool;
  for (int i = 0; i < 80; ++i) {
    std::string word;
    const std::size_t len = word_len(rng);
    for (std::size_t k = 0; k < len; ++k) {
      mtkit::text::append_utf8(word, cp(rng));
    }
    pool.push_back(word);
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::string> corpus;
  for (std::size_t i = 0; i < sentences; ++i) {
    std::string sentence;
    for (int w = 0; w < 12; ++w) {
      if (w) {
        sentence.push_back(' ');
      }
      sentence += pool[pick(rng)];
    }
    corpus.push_back(std::move(sentence));
  }
  return corpus;
}

void BM_TrainBpe(benchmark::State& state) {
  const auto corpus = make_corpus(static_cast<std::size_t>(state.range(0)), U'a', U'z', 1);
  mtkit::bpe::TrainParams params;
  params.target_vocab_size = 2000;
  std::uint64_t bytes = 0;
  for (const auto& doc : corpus) {
    bytes += doc.size();
  }
  for (auto _ : state) {
    auto tokenizer = mtkit::bpe::train_bpe(corpus, params);
    benchmark::DoNotOptimize(tokenizer.vocab_size());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes) * state.iterations());
}
BENCHMARK(BM_TrainBpe)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const auto corpus = make_corpus(2000, U'a', U'z', 2);
  mtkit::bpe::TrainParams params;
  params.target_vocab_size = 2000;
  const auto tokenizer = mtkit::bpe::train_bpe(corpus, params);
  const auto probe = make_corpus(static_cast<std::size_t>(state.range(0)), U'a', U'z', 3);
  std::uint64_t bytes = 0;
  for (const auto& doc : probe) {
    bytes += doc.size();
  }
  for (auto _ : state) {
    std::uint64_t tokens = 0;
    for (const auto& doc : probe) {
      tokens += tokenizer.count_tokens(doc);
    }
    benchmark::DoNotOptimize(tokens);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes) * state.iterations());
}
BENCHMARK(BM_Encode)->Arg(200)->Arg(1000);

void BM_ComputePlan(benchmark::State& state) {
  mtkit::sampling::LanguageStats stats;
  stats.word_counts["en"] = 1000000;
  for (int i = 0; i < state.range(0); ++i) {
    stats.word_counts["l" + std::to_string(i)] = 1000 + i * 37;
  }
  for (auto _ : state) {
    auto plan = mtkit::sampling::compute_plan(stats, 6.0);
    benchmark::DoNotOptimize(plan.probabilities.size());
  }
}
BENCHMARK(BM_ComputePlan)->Arg(10)->Arg(100);

void BM_MixCorpus(benchmark::State& state) {
  mtkit::sampling::LanguageStats stats;
  stats.word_counts["en"] = 100;
  std::map<std::string, std::vector<std::string>> shards = {{"en", {"en text"}}};
  std::uint64_t size = 10;
  for (const auto& l : {"cs", "de", "es", "hi", "is", "ja", "ru", "uk", "zh"}) {
    stats.word_counts[l] = size;
    size *= 2;
    shards[l] = {std::string(l) + " text"};
  }
  const auto plan = mtkit::sampling::compute_plan(stats, 6.0);
  const auto draws = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    auto result = mtkit::sampling::mix_corpus(plan, shards, 99, draws);
    benchmark::DoNotOptimize(result.documents.size());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(draws) * state.iterations());
}
BENCHMARK(BM_MixCorpus)->Arg(10000)->Arg(100000);

void BM_PackSequences(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> len(50, 4000);
  std::vector<std::vector<std::uint32_t>> docs(static_cast<std::size_t>(state.range(0)));
  std::uint64_t ids = 0;
  for (auto& d : docs) {
    d.assign(len(rng), 7);
    ids += d.size();
  }
  for (auto _ : state) {
    std::uint64_t kept = 0;
    mtkit::sampling::SequencePacker packer(
        2048, 60000, [&](std::span<const std::uint32_t> seq) { kept += seq.size(); });
    for (const auto& d : docs) {
      packer.add_document(d);
    }
    auto stats = packer.finish();
    benchmark::DoNotOptimize(stats.sequences);
    benchmark::DoNotOptimize(kept);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(ids) * state.iterations());
}
BENCHMARK(BM_PackSequences)->Arg(1000)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
