#include "mtkit/dataprep.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "mtkit/error.hpp"
#include "mtkit/text.hpp"

namespace mtkit::dataprep {

std::string origin_name(Origin origin) {
  switch (origin) {
    case Origin::flores:
      return "flores";
    case Origin::ntrex:
      return "ntrex";
    case Origin::wmt:
      return "wmt";
    case Origin::untagged:
      break;
  }
  return "untagged";
}

Origin origin_from_string(std::string_view name) {
  if (name == "flores") return Origin::flores;
  if (name == "ntrex") return Origin::ntrex;
  if (name == "wmt") return Origin::wmt;
  throw Error("unknown origin tag \"" + std::string(name) + "\" (expected flores|ntrex|wmt)");
}

LanguagePair LanguagePair::parse(std::string_view spec) {
  const std::size_t dash = spec.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 >= spec.size()) {
    throw Error("malformed language pair \"" + std::string(spec) + "\" (expected \"xx-yy\")");
  }
  LanguagePair pair{std::string(spec.substr(0, dash)), std::string(spec.substr(dash + 1))};
  if (pair.a == pair.b) {
    throw Error("language pair \"" + std::string(spec) + "\" repeats one language");
  }
  return pair;
}

void DirectionPolicy::add_exception(const LanguagePair& pair) {
  bidirectional_exceptions.emplace(std::min(pair.a, pair.b), std::max(pair.a, pair.b));
}

bool DirectionPolicy::is_exception(const std::string& lang_a, const std::string& lang_b) const {
  return bidirectional_exceptions.count({std::min(lang_a, lang_b), std::max(lang_a, lang_b)}) > 0;
}

DirectionPolicy DirectionPolicy::defaults() {
  DirectionPolicy policy;
  policy.add_exception(LanguagePair{"en", "fr"});
  return policy;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size()) {
    std::size_t i = begin;
    if (!text::is_unicode_whitespace(text::decode_utf8(s, i))) {
      break;
    }
    begin = i;
  }
  // Walk forward to find the last non-whitespace code point; UTF-8 cannot be
  // decoded backwards from an arbitrary byte.
  std::size_t i = begin;
  std::size_t end = begin;
  while (i < s.size()) {
    if (!text::is_unicode_whitespace(text::decode_utf8(s, i))) {
      end = i;
    }
  }
  return std::string(s.substr(begin, end - begin));
}

ParallelRecord reversed(const ParallelRecord& r) {
  return ParallelRecord{r.tgt_lang, r.src_lang, r.tgt_text, r.src_text, r.origin};
}

std::string record_key(const ParallelRecord& r, bool with_origin) {
  std::string key;
  key.reserve(r.src_lang.size() + r.tgt_lang.size() + r.src_text.size() + r.tgt_text.size() + 8);
  key += r.src_lang;
  key += '\x1f';
  key += r.tgt_lang;
  key += '\x1f';
  key += r.src_text;
  key += '\x1f';
  key += r.tgt_text;
  if (with_origin) {
    key += '\x1f';
    key += origin_name(r.origin);
  }
  return key;
}

}  // namespace

std::vector<ParallelRecord> ingest_multiparallel(const efficiency::MultiParallelCorpus& corpus,
                                                 std::span<const LanguagePair> pairs,
                                                 const std::string& english_code) {
  corpus.validate();
  const auto column = [&](const std::string& lang) -> const std::vector<std::string>& {
    if (lang == english_code) {
      return corpus.english;
    }
    const auto it = corpus.translations.find(lang);
    if (it == corpus.translations.end()) {
      throw Error("pair references language \"" + lang + "\" missing from the corpus");
    }
    return it->second;
  };

  std::vector<ParallelRecord> records;
  for (const LanguagePair& pair : pairs) {
    const auto& a_col = column(pair.a);
    const auto& b_col = column(pair.b);
    for (std::size_t i = 0; i < a_col.size(); ++i) {
      std::string a_text = trim(a_col[i]);
      std::string b_text = trim(b_col[i]);
      if (a_text.empty() || b_text.empty()) {
        continue;
      }
      records.push_back(ParallelRecord{pair.a, pair.b, a_text, b_text, Origin::flores});
      records.push_back(ParallelRecord{pair.b, pair.a, std::move(b_text), std::move(a_text),
                                       Origin::flores});
    }
  }
  return records;
}

std::vector<ParallelRecord> ingest_directional(std::span<const std::string> src_lines,
                                               std::span<const std::string> tgt_lines,
                                               const std::string& src_lang,
                                               const std::string& tgt_lang, Origin origin) {
  if (src_lines.size() != tgt_lines.size()) {
    throw Error("line count mismatch: " + src_lang + " side has " +
                std::to_string(src_lines.size()) + " lines, " + tgt_lang + " side has " +
                std::to_string(tgt_lines.size()));
  }
  std::vector<ParallelRecord> records;
  records.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    std::string src_text = trim(src_lines[i]);
    std::string tgt_text = trim(tgt_lines[i]);
    if (src_text.empty() || tgt_text.empty()) {
      continue;
    }
    records.push_back(
        ParallelRecord{src_lang, tgt_lang, std::move(src_text), std::move(tgt_text), origin});
  }
  return records;
}

std::vector<ParallelRecord> apply_policy(std::span<const ParallelRecord> records,
                                         const DirectionPolicy& policy) {
  std::vector<ParallelRecord> out;
  out.reserve(records.size() * 2);
  std::unordered_set<std::string> seen;
  seen.reserve(records.size() * 2);
  const auto emit = [&](ParallelRecord r) {
    if (seen.insert(record_key(r, /*with_origin=*/true)).second) {
      out.push_back(std::move(r));
    }
  };

  for (const ParallelRecord& r : records) {
    switch (r.origin) {
      case Origin::untagged:
        throw Error("record " + r.src_lang + "->" + r.tgt_lang + " has no origin tag");
      case Origin::flores:
      case Origin::wmt:
        emit(r);
        emit(reversed(r));
        break;
      case Origin::ntrex:
        if (r.src_lang == policy.english_code) {
          emit(r);
          if (policy.is_exception(r.src_lang, r.tgt_lang)) {
            emit(reversed(r));
          }
        } else if (policy.is_exception(r.src_lang, r.tgt_lang)) {
          emit(r);
          emit(reversed(r));
        }
        // ntrex XX->en records for non-exception pairs are dropped.
        break;
    }
  }
  return out;
}

std::uint64_t dedup_cross_source(std::vector<ParallelRecord>& records) {
  std::unordered_set<std::string> seen;
  seen.reserve(records.size());
  const std::size_t before = records.size();
  std::erase_if(records, [&](const ParallelRecord& r) {
    return !seen.insert(record_key(r, /*with_origin=*/false)).second;
  });
  return before - records.size();
}

StatsTable build_stats(std::span<const ParallelRecord> records) {
  StatsTable table;
  for (const ParallelRecord& r : records) {
    ++table.counts[{r.src_lang, r.tgt_lang}];
    ++table.total;
  }
  return table;
}

std::string stats_text(const StatsTable& table, const std::string& english_code) {
  // Pair up each direction with its reverse, one unordered pair per row;
  // the English-source direction (when present) takes the left column.
  std::string out = "Language pair      Num.    Language pair      Num.\n";
  std::set<std::pair<std::string, std::string>> done;
  char buf[160];
  for (const auto& [key, count] : table.counts) {
    auto unordered =
        std::make_pair(std::min(key.first, key.second), std::max(key.first, key.second));
    if (!done.insert(unordered).second) {
      continue;
    }
    if (unordered.second == english_code) {
      std::swap(unordered.first, unordered.second);
    }
    const std::string fwd = unordered.first + "-" + unordered.second;
    const std::string rev = unordered.second + "-" + unordered.first;
    const auto fwd_it = table.counts.find({unordered.first, unordered.second});
    const auto rev_it = table.counts.find({unordered.second, unordered.first});
    std::string row;
    if (fwd_it != table.counts.end()) {
      std::snprintf(buf, sizeof(buf), "%-16s %7llu  ", fwd.c_str(),
                    static_cast<unsigned long long>(fwd_it->second));
      row += buf;
    } else {
      std::snprintf(buf, sizeof(buf), "%-16s %7s  ", fwd.c_str(), "-");
      row += buf;
    }
    if (rev_it != table.counts.end()) {
      std::snprintf(buf, sizeof(buf), "%-16s %7llu", rev.c_str(),
                    static_cast<unsigned long long>(rev_it->second));
      row += buf;
    }
    while (!row.empty() && row.back() == ' ') {
      row.pop_back();
    }
    out += row;
    out += '\n';
  }
  out += "Total: " + std::to_string(table.total) + "\n";
  return out;
}

std::string stats_json(const StatsTable& table) {
  nlohmann::json directions = nlohmann::json::object();
  for (const auto& [key, count] : table.counts) {
    directions[key.first + "-" + key.second] = count;
  }
  nlohmann::json j;
  j["directions"] = std::move(directions);
  j["total"] = table.total;
  return j.dump(2);
}

void PromptTemplate::validate() const {
  const auto require = [](const std::string& tmpl, const char* placeholder, const char* side) {
    if (tmpl.find(placeholder) == std::string::npos) {
      throw Error(std::string(side) + " template is missing the " + placeholder + " placeholder");
    }
  };
  require(prompt, "{src_name}", "prompt");
  require(prompt, "{tgt_name}", "prompt");
  require(prompt, "{src_text}", "prompt");
  require(completion, "{tgt_text}", "completion");
}

namespace {

std::string render(std::string_view tmpl, const ParallelRecord& r) {
  std::string out;
  out.reserve(tmpl.size() + r.src_text.size() + r.tgt_text.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out += tmpl.substr(pos);
      break;
    }
    out += tmpl.substr(pos, open - pos);
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out += tmpl.substr(open);
      break;
    }
    const std::string_view name = tmpl.substr(open + 1, close - open - 1);
    if (name == "src_name") {
      out += language_name(r.src_lang);
    } else if (name == "tgt_name") {
      out += language_name(r.tgt_lang);
    } else if (name == "src_text") {
      out += r.src_text;
    } else if (name == "tgt_text") {
      out += r.tgt_text;
    } else if (name == "src_lang") {
      out += r.src_lang;
    } else if (name == "tgt_lang") {
      out += r.tgt_lang;
    } else {
      out += tmpl.substr(open, close - open + 1);  // unknown placeholders pass through
    }
    pos = close + 1;
  }
  return out;
}

}  // namespace

std::pair<std::vector<FinetuneExample>, RejectionReport> format_examples(
    std::span<const ParallelRecord> records, const PromptTemplate& tmpl,
    const bpe::Tokenizer& tokenizer, std::uint64_t max_source_length,
    std::uint64_t max_target_length) {
  tmpl.validate();
  std::vector<FinetuneExample> examples;
  examples.reserve(records.size());
  RejectionReport report;
  for (const ParallelRecord& r : records) {
    FinetuneExample ex;
    ex.prompt = render(tmpl.prompt, r);
    ex.completion = render(tmpl.completion, r);
    ex.src_lang = r.src_lang;
    ex.tgt_lang = r.tgt_lang;
    ex.origin = r.origin;
    ex.src_token_len = tokenizer.count_tokens(ex.prompt);
    ex.tgt_token_len = tokenizer.count_tokens(ex.completion);
    if (ex.src_token_len > max_source_length) {
      ++report.source_too_long;
      continue;
    }
    if (ex.tgt_token_len > max_target_length) {
      ++report.target_too_long;
      continue;
    }
    ++report.accepted;
    examples.push_back(std::move(ex));
  }
  return {std::move(examples), report};
}

std::string examples_jsonl(std::span<const FinetuneExample> examples) {
  std::string out;
  for (const FinetuneExample& ex : examples) {
    nlohmann::json j;
    j["prompt"] = ex.prompt;
    j["completion"] = ex.completion;
    j["src_lang"] = ex.src_lang;
    j["tgt_lang"] = ex.tgt_lang;
    j["origin"] = origin_name(ex.origin);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string language_name(const std::string& code) {
  static const std::map<std::string, std::string> names = {
      {"cs", "Czech"},     {"de", "German"},    {"en", "English"},   {"es", "Spanish"},
      {"fr", "French"},    {"hi", "Hindi"},     {"is", "Icelandic"}, {"ja", "Japanese"},
      {"ru", "Russian"},   {"uk", "Ukrainian"}, {"zh", "Chinese"},
  };
  const auto it = names.find(code);
  return it == names.end() ? code : it->second;
}

const std::vector<LanguagePair>& default_pairs() {
  static const std::vector<LanguagePair> pairs = {
      {"cs", "uk"}, {"en", "cs"}, {"en", "de"}, {"en", "es"}, {"en", "fr"}, {"en", "hi"},
      {"en", "is"}, {"en", "ja"}, {"en", "ru"}, {"en", "uk"}, {"en", "zh"}, {"ja", "zh"},
  };
  return pairs;
}

}  // namespace mtkit::dataprep
