#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mtkit/bpe.hpp"

namespace mtkit::vocab_ops {

// Outcome of merging an extension vocabulary into a base tokenizer.
// added_tokens + skipped_duplicates equals the extension vocabulary size
// minus the 256 byte tokens.
struct ExtensionReport {
  std::uint64_t added_tokens = 0;
  std::uint64_t skipped_duplicates = 0;
  std::uint64_t added_merges = 0;
  std::uint64_t skipped_merges = 0;
  std::map<std::string, std::uint64_t> per_language_inputs;  // language -> documents trained on
};

std::string report_json(const ExtensionReport& report);
ExtensionReport report_from_json(std::string_view json_text);

struct ExtensionTrainResult {
  bpe::Tokenizer tokenizer;
  std::map<std::string, std::uint64_t> per_language_docs;
};

// Trains a standalone extension tokenizer on the union of per-language
// corpora. Documents are interleaved round-robin across languages in
// ascending language-code order so the training stream is deterministic.
// Throws when every corpus is empty or size < 256.
ExtensionTrainResult train_extension_vocab(
    const std::map<std::string, std::vector<std::string>>& corpora, std::size_t size,
    std::uint64_t min_pair_frequency = 2,
    bpe::Normalization normalization = bpe::Normalization::identity);

// Appends the extension's novel tokens (in extension-id order) and novel
// merges (in extension rank order) to the base tokenizer. Base ids and base
// merge ranks are untouched, so embedding rows of a model built on the base
// vocabulary stay aligned. Duplicate tokens and duplicate merges are skipped
// and counted; merge identity is by token string, not id.
std::pair<bpe::Tokenizer, ExtensionReport> merge_vocabularies(const bpe::Tokenizer& base,
                                                              const bpe::Tokenizer& ext);

// The documented default extension profile: the four languages whose length
// ratios most benefit from added sub-words.
const std::vector<std::string>& default_extension_languages();

}  // namespace mtkit::vocab_ops
