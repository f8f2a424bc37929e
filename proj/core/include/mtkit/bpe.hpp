#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mtkit::bpe {

using TokenId = std::uint32_t;

enum class Normalization { identity, nfc };

struct TrainParams {
  std::size_t target_vocab_size = 12000;
  std::uint64_t min_pair_frequency = 2;
  Normalization normalization = Normalization::identity;

  // Throws Error when target_vocab_size < 256 or min_pair_frequency < 1.
  void validate() const;
};

// A learned merge; its rank is its position in the merge table.
struct MergeRule {
  std::string left;
  std::string right;

  bool operator==(const MergeRule&) const = default;
};

// Byte-level BPE tokenizer: a dense token -> id vocabulary that always
// contains the 256 single-byte tokens, plus a rank-ordered merge table.
// Immutable after construction; safe for concurrent read-only use.
class Tokenizer {
 public:
  // Byte-only tokenizer: the 256 single-byte tokens, no merges.
  Tokenizer();

  // Builds from explicit parts and checks every vocabulary invariant:
  // dense ids, all 256 byte tokens present, no duplicate tokens, and every
  // merge's left/right/concatenation resolvable with no duplicate pairs.
  static Tokenizer from_parts(std::vector<std::string> tokens, std::vector<MergeRule> merges);

  std::size_t vocab_size() const { return id_to_token_.size(); }
  const std::vector<MergeRule>& merges() const { return merges_; }
  std::optional<TokenId> token_id(std::string_view token) const;
  const std::string& token_bytes(TokenId id) const;  // throws on out-of-range id

  // Id one past the vocabulary, reserved as the end-of-document marker.
  TokenId reserved_eod_id() const { return static_cast<TokenId>(vocab_size()); }

  // Splits the text on Unicode whitespace boundaries and greedily applies
  // merges in ascending rank within each run. Total for any byte string;
  // the output always decodes back to the exact input.
  std::vector<TokenId> encode(std::string_view textdata) const;
  std::uint64_t count_tokens(std::string_view textdata) const;

  // Inverse of encode. Throws on any id >= vocab_size().
  std::string decode(std::span<const TokenId> ids) const;

  bool operator==(const Tokenizer& other) const;

  // --- serialization ---
  // Vocab file: a JSON object mapping the printable form of each token
  // (see text::bytes_to_printable) to its id.
  // Merges file: optional "#version 1" header, then one "left right" line
  // per merge in rank order, tokens in the same printable form.
  std::string vocab_json() const;
  std::string merges_text() const;
  void save(const std::string& vocab_path, const std::string& merges_path) const;

  static Tokenizer from_serialized(std::string_view vocab_json, std::string_view merges_text,
                                   const std::string& vocab_name = "<vocab>",
                                   const std::string& merges_name = "<merges>");
  static Tokenizer load(const std::string& vocab_path, const std::string& merges_path);

  static std::uint64_t pair_key(TokenId left, TokenId right) {
    return (static_cast<std::uint64_t>(left) << 32) | right;
  }

 private:
  void index_merges();  // fills merge_lookup_ from merges_; validates
  std::vector<TokenId> encode_run(std::string_view run) const;

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<MergeRule> merges_;
  // (left id, right id) -> (rank, merged token id)
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, TokenId>> merge_lookup_;
  std::array<TokenId, 256> byte_ids_{};
};

// Pulls the next document into its argument; returns false at end of stream.
using DocumentSource = std::function<bool(std::string&)>;

// Greedy byte-level BPE training. Adjacent-pair frequencies are counted
// within whitespace-delimited runs (merges never cross a run boundary) and
// the most frequent pair is merged until the vocabulary reaches
// target_vocab_size or no pair reaches min_pair_frequency. Ties break to the
// pair with the lexicographically smaller concatenated byte sequence, then
// the smaller left token, making training fully deterministic.
Tokenizer train_bpe(DocumentSource source, const TrainParams& params);
Tokenizer train_bpe(std::span<const std::string> corpus, const TrainParams& params);

}  // namespace mtkit::bpe
