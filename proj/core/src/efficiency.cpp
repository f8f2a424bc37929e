#include "mtkit/efficiency.hpp"

#include <cstdio>
#include <future>
#include <nlohmann/json.hpp>

#include "mtkit/error.hpp"

namespace mtkit::efficiency {

void MultiParallelCorpus::validate() const {
  if (english.empty()) {
    throw Error("multi-parallel corpus has no English sentences");
  }
  if (translations.empty()) {
    throw Error("multi-parallel corpus has no translations");
  }
  for (const auto& [lang, sentences] : translations) {
    if (sentences.size() != english.size()) {
      throw Error("language " + lang + " has " + std::to_string(sentences.size()) +
                  " sentences, English has " + std::to_string(english.size()));
    }
  }
}

namespace {

std::uint64_t corpus_tokens(const bpe::Tokenizer& tokenizer, std::span<const std::string> corpus,
                            ConcatMode mode) {
  if (mode == ConcatMode::sum_sentences) {
    std::uint64_t total = 0;
    for (const std::string& sentence : corpus) {
      total += tokenizer.count_tokens(sentence);
    }
    return total;
  }
  std::string joined;
  std::size_t bytes = 0;
  for (const std::string& sentence : corpus) {
    bytes += sentence.size() + 1;
  }
  joined.reserve(bytes);
  for (const std::string& sentence : corpus) {
    if (!joined.empty()) {
      joined += '\n';
    }
    joined += sentence;
  }
  return tokenizer.count_tokens(joined);
}

std::string format_ratio(double ratio) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", ratio);
  return buf;
}

}  // namespace

double length_ratio(const bpe::Tokenizer& tokenizer, std::span<const std::string> x_corpus,
                    std::span<const std::string> y_corpus, ConcatMode mode) {
  if (x_corpus.empty() || y_corpus.empty()) {
    throw Error("length_ratio requires non-empty corpora");
  }
  if (x_corpus.size() != y_corpus.size()) {
    throw Error("length_ratio corpora are not aligned: " + std::to_string(x_corpus.size()) +
                " vs " + std::to_string(y_corpus.size()) + " sentences");
  }
  const std::uint64_t y_tokens = corpus_tokens(tokenizer, y_corpus, mode);
  if (y_tokens == 0) {
    throw Error("English side tokenized to zero tokens");
  }
  return static_cast<double>(corpus_tokens(tokenizer, x_corpus, mode)) /
         static_cast<double>(y_tokens);
}

EfficiencyReport analyze(const std::map<std::string, const bpe::Tokenizer*>& tokenizers,
                         const MultiParallelCorpus& corpus, ConcatMode mode,
                         const std::string& corpus_id) {
  corpus.validate();
  if (tokenizers.empty()) {
    throw Error("analyze requires at least one tokenizer");
  }
  EfficiencyReport report;
  report.corpus_id = corpus_id;
  for (const auto& [name, tokenizer] : tokenizers) {
    const std::uint64_t english_tokens = corpus_tokens(*tokenizer, corpus.english, mode);
    if (english_tokens == 0) {
      throw Error("English side tokenized to zero tokens under tokenizer " + name);
    }
    report.english_token_count[name] = english_tokens;

    std::vector<std::pair<std::string, std::future<std::uint64_t>>> tasks;
    tasks.reserve(corpus.translations.size());
    for (const auto& [lang, sentences] : corpus.translations) {
      tasks.emplace_back(lang, std::async(std::launch::async, [&, t = tokenizer] {
                           return corpus_tokens(*t, sentences, mode);
                         }));
    }
    for (auto& [lang, task] : tasks) {
      report.entries[{name, lang}] =
          static_cast<double>(task.get()) / static_cast<double>(english_tokens);
    }
  }
  return report;
}

std::string emit_csv(const EfficiencyReport& report) {
  std::string out = "tokenizer,language,length_ratio\n";
  for (const auto& [key, ratio] : report.entries) {
    out += key.first;
    out += ',';
    out += key.second;
    out += ',';
    out += format_ratio(ratio);
    out += '\n';
  }
  return out;
}

std::string emit_json(const EfficiencyReport& report) {
  nlohmann::json j;
  j["corpus_id"] = report.corpus_id;
  j["english_token_count"] = report.english_token_count;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, ratio] : report.entries) {
    // Unlike the CSV, the JSON keeps the ratio at full double precision.
    entries.push_back(
        {{"tokenizer", key.first}, {"language", key.second}, {"length_ratio", ratio}});
  }
  j["entries"] = std::move(entries);
  return j.dump(2);
}

std::string format_table(const EfficiencyReport& report) {
  std::size_t name_w = 9;  // "tokenizer"
  std::size_t lang_w = 8;  // "language"
  for (const auto& [key, ratio] : report.entries) {
    name_w = std::max(name_w, key.first.size());
    lang_w = std::max(lang_w, key.second.size());
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %12s\n", static_cast<int>(name_w), "tokenizer",
                static_cast<int>(lang_w), "language", "length_ratio");
  std::string out = buf;
  for (const auto& [key, ratio] : report.entries) {
    std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %12.6f\n", static_cast<int>(name_w),
                  key.first.c_str(), static_cast<int>(lang_w), key.second.c_str(), ratio);
    out += buf;
  }
  return out;
}

EfficiencyReport parse_csv(std::string_view csv) {
  EfficiencyReport report;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < csv.size()) {
    ++line_no;
    std::size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) {
      eol = csv.size();
    }
    const std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty() || line_no == 1) {
      continue;  // header
    }
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw Error("efficiency csv:" + std::to_string(line_no) + ": expected 3 columns");
    }
    report.entries[{std::string(line.substr(0, c1)),
                    std::string(line.substr(c1 + 1, c2 - c1 - 1))}] =
        std::stod(std::string(line.substr(c2 + 1)));
  }
  return report;
}

EfficiencyReport parse_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("efficiency json: ") + e.what());
  }
  EfficiencyReport report;
  try {
    report.corpus_id = j.value("corpus_id", "");
    if (j.contains("english_token_count")) {
      report.english_token_count =
          j["english_token_count"].get<std::map<std::string, std::uint64_t>>();
    }
    for (const auto& entry : j.value("entries", nlohmann::json::array())) {
      report.entries[{entry.at("tokenizer").get<std::string>(),
                      entry.at("language").get<std::string>()}] =
          entry.at("length_ratio").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("efficiency json: ") + e.what());
  }
  return report;
}

}  // namespace mtkit::efficiency
