#include "mtkit/bpe.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "mtkit/error.hpp"
#include "mtkit/text.hpp"

namespace mtkit::bpe {

void TrainParams::validate() const {
  if (target_vocab_size < 256) {
    throw Error("target_vocab_size must be at least 256 (the byte fallback), got " +
                std::to_string(target_vocab_size));
  }
  if (min_pair_frequency < 1) {
    throw Error("min_pair_frequency must be at least 1");
  }
}

Tokenizer::Tokenizer() {
  id_to_token_.reserve(256);
  for (int b = 0; b < 256; ++b) {
    id_to_token_.emplace_back(1, static_cast<char>(b));
    token_to_id_.emplace(id_to_token_.back(), static_cast<TokenId>(b));
    byte_ids_[static_cast<std::size_t>(b)] = static_cast<TokenId>(b);
  }
}

Tokenizer Tokenizer::from_parts(std::vector<std::string> tokens, std::vector<MergeRule> merges) {
  Tokenizer t;
  t.id_to_token_ = std::move(tokens);
  t.token_to_id_.clear();
  t.token_to_id_.reserve(t.id_to_token_.size());
  for (std::size_t id = 0; id < t.id_to_token_.size(); ++id) {
    const auto [it, inserted] = t.token_to_id_.emplace(t.id_to_token_[id], static_cast<TokenId>(id));
    if (!inserted) {
      throw Error("duplicate token string at ids " + std::to_string(it->second) + " and " +
                  std::to_string(id));
    }
  }
  for (int b = 0; b < 256; ++b) {
    const std::string byte_token(1, static_cast<char>(b));
    const auto it = t.token_to_id_.find(byte_token);
    if (it == t.token_to_id_.end()) {
      throw Error("vocabulary is missing single-byte token 0x" + std::to_string(b));
    }
    t.byte_ids_[static_cast<std::size_t>(b)] = it->second;
  }
  t.merges_ = std::move(merges);
  t.index_merges();
  return t;
}

void Tokenizer::index_merges() {
  merge_lookup_.clear();
  merge_lookup_.reserve(merges_.size());
  for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
    const MergeRule& m = merges_[rank];
    const auto left = token_id(m.left);
    const auto right = token_id(m.right);
    const auto merged = token_id(m.left + m.right);
    if (!left || !right || !merged) {
      throw Error("merge " + std::to_string(rank) +
                  " references tokens missing from the vocabulary");
    }
    const auto [it, inserted] = merge_lookup_.emplace(
        pair_key(*left, *right),
        std::make_pair(static_cast<std::uint32_t>(rank), *merged));
    if (!inserted) {
      throw Error("duplicate merge pair at ranks " + std::to_string(it->second.first) + " and " +
                  std::to_string(rank));
    }
  }
}

std::optional<TokenId> Tokenizer::token_id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) {
    return std::nullopt;
  }
  return it->second;
}

const std::string& Tokenizer::token_bytes(TokenId id) const {
  if (id >= id_to_token_.size()) {
    throw Error("token id " + std::to_string(id) + " out of range (vocab size " +
                std::to_string(id_to_token_.size()) + ")");
  }
  return id_to_token_[id];
}

std::vector<TokenId> Tokenizer::encode_run(std::string_view run) const {
  std::vector<TokenId> syms;
  syms.reserve(run.size());
  for (const unsigned char b : run) {
    syms.push_back(byte_ids_[b]);
  }
  while (syms.size() >= 2) {
    std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
    std::uint64_t best_key = 0;
    TokenId best_merged = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto it = merge_lookup_.find(pair_key(syms[i], syms[i + 1]));
      if (it != merge_lookup_.end() && it->second.first < best_rank) {
        best_rank = it->second.first;
        best_key = it->first;
        best_merged = it->second.second;
      }
    }
    if (best_rank == std::numeric_limits<std::uint32_t>::max()) {
      break;
    }
    // Replace every non-overlapping occurrence, left to right.
    std::size_t w = 0;
    for (std::size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && pair_key(syms[i], syms[i + 1]) == best_key) {
        syms[w++] = best_merged;
        i += 2;
      } else {
        syms[w++] = syms[i++];
      }
    }
    syms.resize(w);
  }
  return syms;
}

std::vector<TokenId> Tokenizer::encode(std::string_view textdata) const {
  std::vector<TokenId> out;
  for (const text::Segment& seg : text::split_segments(textdata)) {
    const std::vector<TokenId> ids = encode_run(seg.bytes);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::uint64_t Tokenizer::count_tokens(std::string_view textdata) const {
  std::uint64_t n = 0;
  for (const text::Segment& seg : text::split_segments(textdata)) {
    n += encode_run(seg.bytes).size();
  }
  return n;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (const TokenId id : ids) {
    out += token_bytes(id);
  }
  return out;
}

bool Tokenizer::operator==(const Tokenizer& other) const {
  return id_to_token_ == other.id_to_token_ && merges_ == other.merges_;
}

namespace {

// Lexicographic comparison of a1+a2 against b1+b2 without concatenating.
int compare_concat(std::string_view a1, std::string_view a2, std::string_view b1,
                   std::string_view b2) {
  const std::size_t an = a1.size() + a2.size();
  const std::size_t bn = b1.size() + b2.size();
  const std::size_t n = std::min(an, bn);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char ca = static_cast<unsigned char>(i < a1.size() ? a1[i] : a2[i - a1.size()]);
    const unsigned char cb = static_cast<unsigned char>(i < b1.size() ? b1[i] : b2[i - b1.size()]);
    if (ca != cb) {
      return ca < cb ? -1 : 1;
    }
  }
  if (an == bn) {
    return 0;
  }
  return an < bn ? -1 : 1;
}

struct Word {
  std::vector<TokenId> syms;
  std::uint64_t count = 0;
};

class Trainer {
 public:
  explicit Trainer(const TrainParams& params) : params_(params) {}

  void consume(std::string_view doc) {
    ++documents_;
    if (params_.normalization == Normalization::nfc) {
      normalized_ = text::normalize_nfc(doc);
      doc = normalized_;
    }
    for (const text::Segment& seg : text::split_segments(doc)) {
      if (seg.bytes.size() > 1) {
        run_counts_[std::string(seg.bytes)] += 1;
      }
    }
  }

  Tokenizer finish() {
    if (documents_ == 0) {
      throw Error("cannot train on an empty corpus (no documents)");
    }
    build_words();
    while (vocab_.size() < params_.target_vocab_size) {
      if (!merge_best_pair()) {
        break;
      }
    }
    return Tokenizer::from_parts(std::move(vocab_), std::move(merges_));
  }

 private:
  struct HeapEntry {
    std::uint64_t count;
    TokenId left;
    TokenId right;
  };

  struct HeapLess {
    const std::vector<std::string>* vocab;
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
      if (a.count != b.count) {
        return a.count < b.count;
      }
      const int c = compare_concat((*vocab)[a.left], (*vocab)[a.right], (*vocab)[b.left],
                                   (*vocab)[b.right]);
      if (c != 0) {
        return c > 0;  // smaller concatenation wins ties
      }
      return (*vocab)[a.left] > (*vocab)[b.left];
    }
  };

  void build_words() {
    vocab_.reserve(params_.target_vocab_size);
    for (int b = 0; b < 256; ++b) {
      vocab_.emplace_back(1, static_cast<char>(b));
      vocab_index_.emplace(vocab_.back(), static_cast<TokenId>(b));
    }
    words_.reserve(run_counts_.size());
    for (const auto& [run, count] : run_counts_) {
      Word w;
      w.count = count;
      w.syms.reserve(run.size());
      for (const unsigned char b : run) {
        w.syms.push_back(static_cast<TokenId>(b));
      }
      words_.push_back(std::move(w));
    }
    run_counts_.clear();
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      add_word_pairs(static_cast<std::uint32_t>(wi), 1);
    }
    heap_ = Heap(HeapLess{&vocab_});
    for (const auto& [key, count] : pair_counts_) {
      push_entry(key, count);
    }
  }

  // sign +1 adds the word's adjacent pairs to the live counts, -1 removes
  // them; newly seen pairs remember the word index for later rescans.
  void add_word_pairs(std::uint32_t word_index, int sign) {
    const Word& w = words_[word_index];
    for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
      const std::uint64_t key = Tokenizer::pair_key(w.syms[i], w.syms[i + 1]);
      auto& count = pair_counts_[key];
      if (sign > 0) {
        count += w.count;
        auto& where = pair_where_[key];
        if (where.empty() || where.back() != word_index) {
          where.push_back(word_index);
        }
      } else {
        count -= w.count;
      }
      touched_.push_back(key);
    }
  }

  void push_entry(std::uint64_t key, std::uint64_t count) {
    if (count >= params_.min_pair_frequency) {
      heap_.push(HeapEntry{count, static_cast<TokenId>(key >> 32),
                           static_cast<TokenId>(key & 0xFFFFFFFFu)});
    }
  }

  bool merge_best_pair() {
    // Lazy deletion: entries are re-pushed whenever a count changes, so the
    // first entry matching its live count is the true maximum.
    std::uint64_t key = 0;
    std::uint64_t count = 0;
    for (;;) {
      if (heap_.empty()) {
        return false;
      }
      const HeapEntry top = heap_.top();
      heap_.pop();
      key = Tokenizer::pair_key(top.left, top.right);
      const auto it = pair_counts_.find(key);
      if (it != pair_counts_.end() && it->second == top.count) {
        count = top.count;
        break;
      }
    }
    if (count < params_.min_pair_frequency) {
      return false;
    }

    const TokenId left = static_cast<TokenId>(key >> 32);
    const TokenId right = static_cast<TokenId>(key & 0xFFFFFFFFu);
    const std::string merged_bytes = vocab_[left] + vocab_[right];
    TokenId merged_id;
    if (const auto it = vocab_index_.find(merged_bytes); it != vocab_index_.end()) {
      merged_id = it->second;  // a different merge already produced this token
    } else {
      merged_id = static_cast<TokenId>(vocab_.size());
      vocab_.push_back(merged_bytes);
      vocab_index_.emplace(merged_bytes, merged_id);
    }
    merges_.push_back(MergeRule{vocab_[left], vocab_[right]});

    std::vector<std::uint32_t> affected;
    if (const auto it = pair_where_.find(key); it != pair_where_.end()) {
      affected = std::move(it->second);
      pair_where_.erase(it);
    }
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

    touched_.clear();
    for (const std::uint32_t wi : affected) {
      Word& w = words_[wi];
      bool contains = false;
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        if (w.syms[i] == left && w.syms[i + 1] == right) {
          contains = true;
          break;
        }
      }
      if (!contains) {
        continue;  // stale index from an earlier rewrite
      }
      add_word_pairs(wi, -1);
      std::size_t out = 0;
      for (std::size_t i = 0; i < w.syms.size();) {
        if (i + 1 < w.syms.size() && w.syms[i] == left && w.syms[i + 1] == right) {
          w.syms[out++] = merged_id;
          i += 2;
        } else {
          w.syms[out++] = w.syms[i++];
        }
      }
      w.syms.resize(out);
      add_word_pairs(wi, +1);
    }

    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
    for (const std::uint64_t k : touched_) {
      const auto it = pair_counts_.find(k);
      if (it == pair_counts_.end()) {
        continue;
      }
      if (it->second == 0) {
        pair_counts_.erase(it);
        continue;
      }
      push_entry(k, it->second);
    }
    pair_counts_.erase(key);
    return true;
  }

  using Heap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess>;

  TrainParams params_;
  std::uint64_t documents_ = 0;
  std::string normalized_;
  std::unordered_map<std::string, std::uint64_t> run_counts_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> vocab_index_;
  std::vector<MergeRule> merges_;
  std::vector<Word> words_;
  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> pair_where_;
  std::vector<std::uint64_t> touched_;
  Heap heap_{HeapLess{nullptr}};
};

}  // namespace

Tokenizer train_bpe(DocumentSource source, const TrainParams& params) {
  params.validate();
  Trainer trainer(params);
  std::string doc;
  while (source(doc)) {
    trainer.consume(doc);
  }
  return trainer.finish();
}

Tokenizer train_bpe(std::span<const std::string> corpus, const TrainParams& params) {
  std::size_t next = 0;
  return train_bpe(
      [&](std::string& doc) {
        if (next >= corpus.size()) {
          return false;
        }
        doc = corpus[next++];
        return true;
      },
      params);
}

}  // namespace mtkit::bpe
