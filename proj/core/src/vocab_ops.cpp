#include "mtkit/vocab_ops.hpp"

#include <nlohmann/json.hpp>
#include <set>
#include <unordered_set>

#include "mtkit/error.hpp"

namespace mtkit::vocab_ops {

std::string report_json(const ExtensionReport& report) {
  nlohmann::json j;
  j["added_tokens"] = report.added_tokens;
  j["skipped_duplicates"] = report.skipped_duplicates;
  j["added_merges"] = report.added_merges;
  j["skipped_merges"] = report.skipped_merges;
  j["per_language_inputs"] = report.per_language_inputs;
  return j.dump(2);
}

ExtensionReport report_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("extension report: ") + e.what());
  }
  ExtensionReport r;
  try {
    r.added_tokens = j.value("added_tokens", 0ull);
    r.skipped_duplicates = j.value("skipped_duplicates", 0ull);
    r.added_merges = j.value("added_merges", 0ull);
    r.skipped_merges = j.value("skipped_merges", 0ull);
    if (j.contains("per_language_inputs")) {
      r.per_language_inputs =
          j["per_language_inputs"].get<std::map<std::string, std::uint64_t>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("extension report: ") + e.what());
  }
  return r;
}

ExtensionTrainResult train_extension_vocab(
    const std::map<std::string, std::vector<std::string>>& corpora, std::size_t size,
    std::uint64_t min_pair_frequency, bpe::Normalization normalization) {
  std::size_t total_docs = 0;
  std::size_t longest = 0;
  for (const auto& [lang, docs] : corpora) {
    total_docs += docs.size();
    longest = std::max(longest, docs.size());
  }
  if (total_docs == 0) {
    throw Error("extension training needs at least one non-empty corpus");
  }

  bpe::TrainParams params;
  params.target_vocab_size = size;
  params.min_pair_frequency = min_pair_frequency;
  params.normalization = normalization;

  // Round-robin over languages (ascending code order): document i of every
  // language before document i+1 of any.
  std::size_t round = 0;
  auto lang_it = corpora.begin();
  const auto source = [&](std::string& doc) {
    while (round < longest) {
      if (lang_it == corpora.end()) {
        lang_it = corpora.begin();
        ++round;
        continue;
      }
      const auto& docs = lang_it->second;
      ++lang_it;
      if (round < docs.size()) {
        doc = docs[round];
        return true;
      }
    }
    return false;
  };

  ExtensionTrainResult result{bpe::train_bpe(source, params), {}};
  for (const auto& [lang, docs] : corpora) {
    result.per_language_docs[lang] = docs.size();
  }
  return result;
}

std::pair<bpe::Tokenizer, ExtensionReport> merge_vocabularies(const bpe::Tokenizer& base,
                                                              const bpe::Tokenizer& ext) {
  ExtensionReport report;

  std::vector<std::string> tokens;
  tokens.reserve(base.vocab_size() + ext.vocab_size());
  std::unordered_set<std::string> token_set;
  token_set.reserve(base.vocab_size() + ext.vocab_size());
  for (std::size_t id = 0; id < base.vocab_size(); ++id) {
    tokens.push_back(base.token_bytes(static_cast<bpe::TokenId>(id)));
    token_set.insert(tokens.back());
  }
  for (std::size_t id = 0; id < ext.vocab_size(); ++id) {
    const std::string& tok = ext.token_bytes(static_cast<bpe::TokenId>(id));
    if (tok.size() == 1) {
      continue;  // byte tokens are shared by construction and not counted
    }
    if (token_set.count(tok)) {
      ++report.skipped_duplicates;
    } else {
      tokens.push_back(tok);
      token_set.insert(tok);
      ++report.added_tokens;
    }
  }

  std::vector<bpe::MergeRule> merges = base.merges();
  std::set<std::pair<std::string, std::string>> merge_set;
  for (const bpe::MergeRule& m : merges) {
    merge_set.emplace(m.left, m.right);
  }
  for (const bpe::MergeRule& m : ext.merges()) {
    if (merge_set.count({m.left, m.right})) {
      ++report.skipped_merges;
      continue;
    }
    if (!token_set.count(m.left) || !token_set.count(m.right) ||
        !token_set.count(m.left + m.right)) {
      ++report.skipped_merges;
      continue;
    }
    merges.push_back(m);
    merge_set.emplace(m.left, m.right);
    ++report.added_merges;
  }

  return {bpe::Tokenizer::from_parts(std::move(tokens), std::move(merges)), std::move(report)};
}

const std::vector<std::string>& default_extension_languages() {
  static const std::vector<std::string> langs = {"hi", "is", "ja", "zh"};
  return langs;
}

}  // namespace mtkit::vocab_ops
