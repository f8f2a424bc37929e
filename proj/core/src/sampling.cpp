#include "mtkit/sampling.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "mtkit/error.hpp"
#include "mtkit/text.hpp"

namespace mtkit::sampling {

void LanguageStats::validate() const {
  if (!word_counts.count(english_code)) {
    throw Error("language stats are missing the English entry \"" + english_code + "\"");
  }
  for (const auto& [lang, count] : word_counts) {
    if (lang != english_code && count > 0) {
      return;
    }
  }
  throw Error("every non-English word count is zero");
}

void SamplingPlan::validate(double tol) const {
  const auto it = probabilities.find(english_code);
  if (it == probabilities.end()) {
    throw Error("plan is missing the English entry \"" + english_code + "\"");
  }
  if (it->second != english_share) {
    throw Error("English probability " + std::to_string(it->second) + " is not the fixed share " +
                std::to_string(english_share));
  }
  double total = 0.0;
  double non_english = 0.0;
  for (const auto& [lang, p] : probabilities) {
    if (p < 0.0 || p > 1.0) {
      throw Error("probability for " + lang + " is outside [0, 1]");
    }
    total += p;
    if (lang != english_code) {
      non_english += p;
    }
  }
  if (std::abs(total - 1.0) > tol) {
    throw Error("probabilities sum to " + std::to_string(total) + ", not 1");
  }
  if (std::abs(non_english - non_english_share) > tol) {
    throw Error("non-English mass " + std::to_string(non_english) + " differs from " +
                std::to_string(non_english_share));
  }
}

SamplingPlan compute_plan(const LanguageStats& stats, double temperature, double english_share) {
  stats.validate();
  if (!(temperature > 0.0)) {
    throw Error("temperature must be positive, got " + std::to_string(temperature));
  }
  if (english_share < 0.0 || english_share > 1.0) {
    throw Error("english_share must lie in [0, 1]");
  }

  SamplingPlan plan;
  plan.temperature = temperature;
  plan.english_code = stats.english_code;
  plan.english_share = english_share;
  plan.non_english_share = 1.0 - english_share;
  plan.word_counts = stats.word_counts;

  // Normalizing counts to shares before exponentiation (p_l = D_l / sum D)
  // cancels in the final ratio, so weights come directly from D_l^(1/T).
  const double inv_t = 1.0 / temperature;
  std::map<std::string, double> weights;
  double weight_sum = 0.0;
  for (const auto& [lang, count] : stats.word_counts) {
    if (lang == stats.english_code) {
      continue;
    }
    const double w = count == 0 ? 0.0 : std::pow(static_cast<double>(count), inv_t);
    weights[lang] = w;
    weight_sum += w;
  }

  plan.probabilities[stats.english_code] = english_share;
  for (const auto& [lang, w] : weights) {
    plan.probabilities[lang] = w == 0.0 ? 0.0 : plan.non_english_share * (w / weight_sum);
  }
  return plan;
}

std::uint64_t count_words(std::span<const std::string> documents) {
  std::uint64_t total = 0;
  for (const std::string& doc : documents) {
    total += text::count_words(doc);
  }
  return total;
}

std::string plan_json(const SamplingPlan& plan) {
  nlohmann::json j;
  j["probabilities"] = plan.probabilities;
  j["temperature"] = plan.temperature;
  j["english"] = plan.english_code;
  j["english_share"] = plan.english_share;
  j["non_english_share"] = plan.non_english_share;
  j["word_counts"] = plan.word_counts;
  return j.dump(2);
}

SamplingPlan plan_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("sampling plan: ") + e.what());
  }
  SamplingPlan plan;
  if (!j.contains("probabilities")) {
    throw Error("sampling plan: missing \"probabilities\"");
  }
  try {
    plan.probabilities = j["probabilities"].get<std::map<std::string, double>>();
    plan.temperature = j.value("temperature", 6.0);
    plan.english_code = j.value("english", std::string("en"));
    plan.english_share = j.value("english_share", 0.1);
    plan.non_english_share = j.value("non_english_share", 0.9);
    if (j.contains("word_counts")) {
      plan.word_counts = j["word_counts"].get<std::map<std::string, std::uint64_t>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("sampling plan: ") + e.what());
  }
  return plan;
}

MixResult mix_corpus(const SamplingPlan& plan,
                     const std::map<std::string, std::vector<std::string>>& shards,
                     std::uint64_t seed, std::uint64_t total_docs) {
  struct Bucket {
    std::string language;
    double cumulative = 0.0;
    const std::vector<std::string>* shard = nullptr;
    std::uint64_t position = 0;
  };
  std::vector<Bucket> buckets;
  double acc = 0.0;
  for (const auto& [lang, p] : plan.probabilities) {
    if (p <= 0.0) {
      continue;  // zero-probability languages are excluded from draws
    }
    const auto it = shards.find(lang);
    if (it == shards.end() || it->second.empty()) {
      throw Error("no shard for language \"" + lang + "\" (probability " + std::to_string(p) +
                  ")");
    }
    acc += p;
    buckets.push_back(Bucket{lang, acc, &it->second, 0});
  }
  if (buckets.empty()) {
    throw Error("sampling plan has no language with positive probability");
  }

  MixResult result;
  result.documents.reserve(total_docs);
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = 0; i < total_docs; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    Bucket* chosen = &buckets.back();
    for (Bucket& b : buckets) {
      if (u < b.cumulative) {
        chosen = &b;
        break;
      }
    }
    const std::uint64_t shard_size = chosen->shard->size();
    const std::uint64_t pos = chosen->position++;
    result.documents.push_back(
        MixedDocument{chosen->language, (*chosen->shard)[pos % shard_size], pos / shard_size});
  }
  // Every plan language gets an entry, so zero-probability languages report
  // zero draws instead of being absent.
  for (const auto& [lang, p] : plan.probabilities) {
    result.draws[lang] = 0;
    result.epochs[lang] = 0;
  }
  for (const Bucket& b : buckets) {
    result.draws[b.language] = b.position;
    result.epochs[b.language] = b.position / b.shard->size();
  }
  return result;
}

SequencePacker::SequencePacker(std::uint32_t seq_len, std::uint32_t eod_id, Sink sink)
    : seq_len_(seq_len), eod_id_(eod_id), sink_(std::move(sink)) {
  if (seq_len_ == 0) {
    throw Error("sequence length must be positive");
  }
  buffer_.reserve(seq_len_);
}

void SequencePacker::add_document(std::span<const std::uint32_t> ids) {
  ++stats_.documents;
  stats_.input_tokens += ids.size();
  std::size_t consumed = 0;
  for (;;) {
    const std::size_t room = seq_len_ - buffer_.size();
    const std::size_t take = std::min(room, ids.size() - consumed);
    buffer_.insert(buffer_.end(), ids.begin() + consumed, ids.begin() + consumed + take);
    consumed += take;
    if (buffer_.size() < seq_len_) {
      break;
    }
    sink_(buffer_);
    ++stats_.sequences;
    buffer_.clear();
  }
  buffer_.push_back(eod_id_);
  if (buffer_.size() == seq_len_) {
    sink_(buffer_);
    ++stats_.sequences;
    buffer_.clear();
  }
}

PackStats SequencePacker::finish() {
  stats_.dropped_tokens = buffer_.size();
  buffer_.clear();
  return stats_;
}

std::pair<std::vector<std::vector<std::uint32_t>>, PackStats> pack_sequences(
    std::span<const std::vector<std::uint32_t>> documents, std::uint32_t seq_len,
    std::uint32_t eod_id) {
  std::vector<std::vector<std::uint32_t>> sequences;
  SequencePacker packer(seq_len, eod_id, [&](std::span<const std::uint32_t> seq) {
    sequences.emplace_back(seq.begin(), seq.end());
  });
  for (const auto& doc : documents) {
    packer.add_document(doc);
  }
  return {std::move(sequences), packer.finish()};
}

}  // namespace mtkit::sampling
