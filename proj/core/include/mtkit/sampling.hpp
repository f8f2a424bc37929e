#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mtkit::sampling {

// Per-language corpus sizes, measured in whitespace-delimited words.
struct LanguageStats {
  std::map<std::string, std::uint64_t> word_counts;
  std::string english_code = "en";

  // Throws unless English is present and some non-English count is positive.
  void validate() const;
};

struct SamplingPlan {
  std::map<std::string, double> probabilities;
  double temperature = 6.0;
  std::string english_code = "en";
  double english_share = 0.1;
  double non_english_share = 0.9;
  std::map<std::string, std::uint64_t> word_counts;  // provenance (may be empty)

  // Checks: probabilities sum to 1 within tol, the English entry equals
  // english_share, every probability is in [0, 1], and the non-English mass
  // equals non_english_share within tol.
  void validate(double tol = 1e-9) const;
};

// Temperature sampling over the non-English languages:
//   P(l) = non_english_share * D_l^(1/T) / sum_l' D_l'^(1/T)
// with P(english) fixed at english_share. Languages with D_l = 0 get
// probability 0. Throws when T <= 0 or every non-English count is zero.
SamplingPlan compute_plan(const LanguageStats& stats, double temperature = 6.0,
                          double english_share = 0.1);

std::uint64_t count_words(std::span<const std::string> documents);

std::string plan_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(std::string_view json_text);

struct MixedDocument {
  std::string language;
  std::string textdata;
  std::uint64_t epoch = 0;  // how many times this language's shard had wrapped
};

struct MixResult {
  std::vector<MixedDocument> documents;
  std::map<std::string, std::uint64_t> draws;   // per-language draw counts
  std::map<std::string, std::uint64_t> epochs;  // completed passes per language
};

// Draws total_docs language labels i.i.d. from the plan and serves each
// language's shard in order, wrapping when exhausted. The generator is
// std::mt19937_64 seeded with `seed`; each draw maps one 64-bit output to
// [0,1) as (x >> 11) * 2^-53 and walks the cumulative probabilities in
// ascending language-code order, so streams are reproducible bit-for-bit
// across platforms. Languages with positive probability must have a
// non-empty shard.
MixResult mix_corpus(const SamplingPlan& plan,
                     const std::map<std::string, std::vector<std::string>>& shards,
                     std::uint64_t seed, std::uint64_t total_docs);

struct PackStats {
  std::uint64_t documents = 0;
  std::uint64_t input_tokens = 0;
  std::uint64_t sequences = 0;
  std::uint64_t dropped_tokens = 0;  // trailing partial chunk
};

// Concatenates documents, appending eod_id after each, and slices the flat
// stream into consecutive sequences of exactly seq_len ids. The final
// partial chunk is dropped, never padded. Conservation:
//   input_tokens + documents == seq_len * sequences + dropped_tokens.
class SequencePacker {
 public:
  using Sink = std::function<void(std::span<const std::uint32_t>)>;

  SequencePacker(std::uint32_t seq_len, std::uint32_t eod_id, Sink sink);

  void add_document(std::span<const std::uint32_t> ids);
  PackStats finish();  // returns the stats; the packer is then exhausted

 private:
  std::uint32_t seq_len_;
  std::uint32_t eod_id_;
  Sink sink_;
  std::vector<std::uint32_t> buffer_;
  PackStats stats_;
};

// Convenience wrapper collecting the packed sequences in memory.
std::pair<std::vector<std::vector<std::uint32_t>>, PackStats> pack_sequences(
    std::span<const std::vector<std::uint32_t>> documents, std::uint32_t seq_len,
    std::uint32_t eod_id);

}  // namespace mtkit::sampling
