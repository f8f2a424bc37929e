#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtkit/bpe.hpp"
#include "mtkit/efficiency.hpp"

namespace mtkit::dataprep {

enum class Origin { untagged, flores, ntrex, wmt };

std::string origin_name(Origin origin);
Origin origin_from_string(std::string_view name);  // throws on unknown tag

// One translation pair; texts are stored whitespace-trimmed and non-empty.
struct ParallelRecord {
  std::string src_lang;
  std::string tgt_lang;
  std::string src_text;
  std::string tgt_text;
  Origin origin = Origin::untagged;

  bool operator==(const ParallelRecord&) const = default;
};

struct LanguagePair {
  std::string a;
  std::string b;

  static LanguagePair parse(std::string_view spec);  // "en-de"
  std::string str() const { return a + "-" + b; }
};

// Per-origin direction rules:
//   flores -> both directions for every configured pair
//   ntrex  -> en->XX only, except pairs listed in bidirectional_exceptions
//   wmt    -> both directions
struct DirectionPolicy {
  std::string english_code = "en";
  std::set<std::pair<std::string, std::string>> bidirectional_exceptions;  // stored sorted

  void add_exception(const LanguagePair& pair);
  bool is_exception(const std::string& lang_a, const std::string& lang_b) const;

  static DirectionPolicy defaults();  // en, exception {en-fr}
};

// Emits one record per aligned sentence index per configured pair, in both
// directions (origin flores). English is the corpus's english column; every
// other pair member must appear in corpus.translations. Sentence pairs with
// an empty side after trimming are skipped.
std::vector<ParallelRecord> ingest_multiparallel(const efficiency::MultiParallelCorpus& corpus,
                                                 std::span<const LanguagePair> pairs,
                                                 const std::string& english_code = "en");

// One record per aligned line in the stated direction. Throws when the two
// sides disagree on line count, naming both counts.
std::vector<ParallelRecord> ingest_directional(std::span<const std::string> src_lines,
                                               std::span<const std::string> tgt_lines,
                                               const std::string& src_lang,
                                               const std::string& tgt_lang, Origin origin);

// Applies the per-origin direction rules, then removes exact duplicate
// records (the full 5-tuple), keeping the first occurrence. ntrex records
// that would leave a non-exception pair in the XX->en direction are dropped.
// Throws on an untagged record. Idempotent.
std::vector<ParallelRecord> apply_policy(std::span<const ParallelRecord> records,
                                         const DirectionPolicy& policy);

// Cross-source dedup on (src_lang, tgt_lang, src_text, tgt_text) ignoring
// origin, keeping the first occurrence; returns how many records it removed.
std::uint64_t dedup_cross_source(std::vector<ParallelRecord>& records);

struct StatsTable {
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts;  // (src, tgt) -> records
  std::uint64_t total = 0;
};

StatsTable build_stats(std::span<const ParallelRecord> records);
// Two-column text layout: each unordered pair's directions side by side
// (English-source direction on the left), ending with the grand total.
std::string stats_text(const StatsTable& table, const std::string& english_code = "en");
std::string stats_json(const StatsTable& table);

// Prompt/completion shape for one record. The prompt template must mention
// {src_name}, {tgt_name} and {src_text}; the completion template must
// mention {tgt_text}. {src_lang}/{tgt_lang} expand to the raw codes.
struct PromptTemplate {
  std::string prompt =
      "Translate this from {src_name} to {tgt_name}:\n{src_name}: {src_text}\n{tgt_name}:";
  std::string completion = " {tgt_text}";

  void validate() const;  // throws on a template missing its placeholders
};

struct FinetuneExample {
  std::string prompt;
  std::string completion;
  std::string src_lang;
  std::string tgt_lang;
  Origin origin = Origin::untagged;
  std::uint64_t src_token_len = 0;
  std::uint64_t tgt_token_len = 0;
};

struct RejectionReport {
  std::uint64_t accepted = 0;
  std::uint64_t source_too_long = 0;
  std::uint64_t target_too_long = 0;
};

// Renders every record through the template and measures both sides with the
// tokenizer. Records over the limits are rejected whole, never truncated;
// the limits are inclusive.
std::pair<std::vector<FinetuneExample>, RejectionReport> format_examples(
    std::span<const ParallelRecord> records, const PromptTemplate& tmpl,
    const bpe::Tokenizer& tokenizer, std::uint64_t max_source_length,
    std::uint64_t max_target_length);

std::string examples_jsonl(std::span<const FinetuneExample> examples);

// English display name for a language code; falls back to the code itself.
std::string language_name(const std::string& code);

// The shipped default pair list (the 11 task directions' pairs plus en-fr).
const std::vector<LanguagePair>& default_pairs();

}  // namespace mtkit::dataprep
