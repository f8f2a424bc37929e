#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mtkit/bpe.hpp"

namespace mtkit::efficiency {

// English-centric multi-parallel corpus: translations[lang][i] is aligned to
// english[i] for every language.
struct MultiParallelCorpus {
  std::vector<std::string> english;
  std::map<std::string, std::vector<std::string>> translations;

  void validate() const;  // throws on misaligned lengths or no languages
};

enum class ConcatMode {
  newline_join,   // encode the sentences joined with a single '\n'
  sum_sentences,  // sum per-sentence token counts (no separator artifacts)
};

// Token count of the x side divided by the token count of the y (English)
// side, both measured over the whole corpus under the given mode.
double length_ratio(const bpe::Tokenizer& tokenizer, std::span<const std::string> x_corpus,
                    std::span<const std::string> y_corpus,
                    ConcatMode mode = ConcatMode::newline_join);

struct EfficiencyReport {
  std::string corpus_id;
  // (tokenizer name, language) -> length ratio
  std::map<std::pair<std::string, std::string>, double> entries;
  std::map<std::string, std::uint64_t> english_token_count;  // per tokenizer
};

// One entry per (tokenizer, language); the English token count is computed
// once per tokenizer and reused. Languages run in parallel.
EfficiencyReport analyze(const std::map<std::string, const bpe::Tokenizer*>& tokenizers,
                         const MultiParallelCorpus& corpus,
                         ConcatMode mode = ConcatMode::newline_join,
                         const std::string& corpus_id = "");

// CSV: "tokenizer,language,length_ratio" header, ratios at 6 decimal places,
// rows ordered by tokenizer name then language code. JSON mirrors the same
// data plus corpus_id and the English token counts.
std::string emit_csv(const EfficiencyReport& report);
std::string emit_json(const EfficiencyReport& report);
std::string format_table(const EfficiencyReport& report);

EfficiencyReport parse_csv(std::string_view csv);  // entries only
EfficiencyReport parse_json(std::string_view json_text);

}  // namespace mtkit::efficiency
