#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mtkit/bpe.hpp"
#include "mtkit/sampling.hpp"
#include "mtkit/stream_io.hpp"
#include "test_util.hpp"

#ifndef MTKIT_CLI_PATH
#error "MTKIT_CLI_PATH must point at the mtkit binary"
#endif

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout only

  // The machine-readable summary is the last stdout line.
  nlohmann::json summary() const {
    std::string text = output;
    while (!text.empty() && text.back() == '\n') {
      text.pop_back();
    }
    const std::size_t pos = text.find_last_of('\n');
    return nlohmann::json::parse(pos == std::string::npos ? text : text.substr(pos + 1));
  }
};

CommandResult run_cli(const std::string& args) {
  const std::string cmd = std::string(MTKIT_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult result;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) {
    result.output.append(buf, n);
  }
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

void write_numbered_lines(const std::string& path, const std::string& prefix, std::size_t n) {
  std::string content;
  for (std::size_t i = 0; i < n; ++i) {
    content += prefix + " " + std::to_string(i) + "\n";
  }
  testutil::write_file(path, content);
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("").exit_code == 1);
  CHECK(run_cli("no-such-command").exit_code == 1);
  CHECK(run_cli("compute-plan --no-such-flag").exit_code == 1);
  CHECK(run_cli("train-vocab").exit_code == 1);  // neither --input nor --lang
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("compute-plan --help").exit_code == 0);
}

TEST_CASE("data errors exit with code 2") {
  testutil::TempDir dir;
  CHECK(run_cli("compute-plan --counts /nonexistent/counts.json").exit_code == 2);
  testutil::write_file(dir.file("bad.json"), "{not json");
  CHECK(run_cli("compute-plan --counts " + dir.file("bad.json")).exit_code == 2);
}

TEST_CASE("compute-plan writes the closed-form plan") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("counts.json"), R"({"en": 999, "de": 64, "is": 1})");
  auto result = run_cli("compute-plan --counts " + dir.file("counts.json") +
                        " --temperature 6 --output-dir " + dir.path().string());
  REQUIRE(result.exit_code == 0);

  auto summary = result.summary();
  CHECK(summary["command"] == "compute-plan");
  CHECK(summary["english"] == 0.1);
  CHECK(summary["languages"] == 3);

  const std::string plan_path = summary["plan_path"].get<std::string>();
  auto plan = mtkit::sampling::plan_from_json(testutil::read_file(plan_path));
  CHECK(std::abs(plan.probabilities.at("en") - 0.1) == 0.0);
  CHECK(std::abs(plan.probabilities.at("de") - 0.6) <= 1e-12);
  CHECK(std::abs(plan.probabilities.at("is") - 0.3) <= 1e-12);
  CHECK(plan.word_counts.at("de") == 64);
}

TEST_CASE("compute-plan rejects conflicting input flags") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("counts.json"), R"({"en": 9, "de": 1})");
  testutil::write_file(dir.file("de.txt"), "ein satz\n");
  CHECK(run_cli("compute-plan --counts " + dir.file("counts.json") + " --corpus de=" +
                dir.file("de.txt"))
            .exit_code == 1);
  CHECK(run_cli("compute-plan").exit_code == 1);
}

TEST_CASE("compute-plan counts words from corpus files") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("en.txt"), "one two three\nfour\n");
  testutil::write_file(dir.file("de.txt"), "eins zwei\n");
  auto result = run_cli("compute-plan --corpus en=" + dir.file("en.txt") + " --corpus de=" +
                        dir.file("de.txt") + " --output-dir " + dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto plan = mtkit::sampling::plan_from_json(
      testutil::read_file(result.summary()["plan_path"].get<std::string>()));
  CHECK(plan.word_counts.at("en") == 4);
  CHECK(plan.word_counts.at("de") == 2);
  CHECK(plan.probabilities.at("de") == 0.9);
}

TEST_CASE("config file values apply unless a flag overrides them") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("counts.json"), R"({"en": 9, "de": 64, "is": 1})");
  testutil::write_file(dir.file("cfg.json"),
                       nlohmann::json{{"counts", dir.file("counts.json")},
                                      {"temperature", 1.0},
                                      {"output_dir", dir.path().string()}}
                           .dump());

  auto from_config = run_cli("compute-plan --config " + dir.file("cfg.json"));
  REQUIRE(from_config.exit_code == 0);
  CHECK(from_config.summary()["temperature"] == 1.0);

  auto flag_wins = run_cli("compute-plan --config " + dir.file("cfg.json") + " --temperature 6");
  REQUIRE(flag_wins.exit_code == 0);
  CHECK(flag_wins.summary()["temperature"] == 6.0);
  auto plan = mtkit::sampling::plan_from_json(
      testutil::read_file(flag_wins.summary()["plan_path"].get<std::string>()));
  CHECK(std::abs(plan.probabilities.at("de") - 0.6) <= 1e-12);
}

TEST_CASE("train-vocab learns the traced merge order") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("corpus.txt"), "abab ab\n");
  auto result = run_cli("train-vocab --input " + dir.file("corpus.txt") +
                        " --vocab-size 258 --min-frequency 1 --name micro --output-dir " +
                        dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto summary = result.summary();
  CHECK(summary["vocab_size"] == 258);
  CHECK(summary["merges"] == 2);
  CHECK(summary["documents"] == 1);

  auto tok = mtkit::bpe::Tokenizer::load(summary["vocab_path"].get<std::string>(),
                                         summary["merges_path"].get<std::string>());
  REQUIRE(tok.merges().size() == 2);
  CHECK(tok.merges()[0] == mtkit::bpe::MergeRule{"a", "b"});
  CHECK(tok.merges()[1] == mtkit::bpe::MergeRule{"ab", "ab"});
}

TEST_CASE("train-vocab per-language mode reports document counts") {
  testutil::TempDir dir;
  write_numbered_lines(dir.file("hi.txt"), "\xE0\xA4\x85\xE0\xA4\x86 \xE0\xA4\x85\xE0\xA4\x86",
                       30);
  write_numbered_lines(dir.file("is.txt"), "ab ab", 20);
  auto result = run_cli("train-vocab --lang hi=" + dir.file("hi.txt") + " --lang is=" +
                        dir.file("is.txt") + " --vocab-size 300 --name ext --output-dir " +
                        dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto summary = result.summary();
  CHECK(summary["documents"] == 50);
  CHECK(summary["per_language_documents"]["hi"] == 30);
  CHECK(summary["per_language_documents"]["is"] == 20);
  CHECK(run_cli("train-vocab --input x.txt --lang a=b.txt").exit_code == 1);
}

TEST_CASE("merge-vocab merges serialized tokenizers") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("latin.txt"), "abab abab\n");
  testutil::write_file(dir.file("greek.txt"), "\xCE\xB1\xCE\xB1 \xCE\xB1\xCE\xB1\n");
  REQUIRE(run_cli("train-vocab --input " + dir.file("latin.txt") +
                  " --vocab-size 300 --name base --output-dir " + dir.path().string())
              .exit_code == 0);
  REQUIRE(run_cli("train-vocab --input " + dir.file("greek.txt") +
                  " --vocab-size 300 --name ext --output-dir " + dir.path().string())
              .exit_code == 0);

  auto result = run_cli("merge-vocab --base-vocab " + dir.file("base.vocab.json") +
                        " --base-merges " + dir.file("base.merges.txt") + " --ext-vocab " +
                        dir.file("ext.vocab.json") + " --ext-merges " +
                        dir.file("ext.merges.txt") + " --name merged --output-dir " +
                        dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto summary = result.summary();
  CHECK(summary["added_tokens"].get<int>() > 0);
  auto merged = mtkit::bpe::Tokenizer::load(summary["vocab_path"].get<std::string>(),
                                            summary["merges_path"].get<std::string>());
  CHECK(merged.token_id("\xCE\xB1\xCE\xB1").has_value());
  CHECK(merged.token_id("ab").has_value());

  // Missing required flag.
  CHECK(run_cli("merge-vocab --base-vocab x").exit_code == 1);
}

TEST_CASE("analyze-efficiency reports ratio 1 on identical text") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("text.txt"), "a sentence here\nanother line\n");
  testutil::write_file(dir.file("seed.txt"), "seed corpus\n");
  REQUIRE(run_cli("train-vocab --input " + dir.file("seed.txt") +
                  " --vocab-size 256 --name bytes --output-dir " + dir.path().string())
              .exit_code == 0);

  auto result = run_cli("analyze-efficiency --english " + dir.file("text.txt") +
                        " --translation de=" + dir.file("text.txt") + " --translation fr=" +
                        dir.file("text.txt") + " --tokenizer bytes=" +
                        dir.file("bytes.vocab.json") + "," + dir.file("bytes.merges.txt") +
                        " --corpus-id identical --output-dir " + dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto summary = result.summary();
  CHECK(summary["entries"] == 2);

  const std::string csv = testutil::read_file(summary["csv_path"].get<std::string>());
  CHECK(csv ==
        "tokenizer,language,length_ratio\n"
        "bytes,de,1.000000\n"
        "bytes,fr,1.000000\n");
  auto parsed = nlohmann::json::parse(testutil::read_file(summary["json_path"].get<std::string>()));
  CHECK(parsed["corpus_id"] == "identical");
}

TEST_CASE("prepare-finetune reproduces the per-origin direction split") {
  testutil::TempDir dir;
  // Per pair: 5 symmetric, 4 one-way, 6 symmetric-from-single lines.
  write_numbered_lines(dir.file("f_en.txt"), "flores english", 5);
  write_numbered_lines(dir.file("f_de.txt"), "flores deutsch", 5);
  write_numbered_lines(dir.file("n_en.txt"), "ntrex english", 4);
  write_numbered_lines(dir.file("n_de.txt"), "ntrex deutsch", 4);
  write_numbered_lines(dir.file("w_en.txt"), "wmt english", 6);
  write_numbered_lines(dir.file("w_de.txt"), "wmt deutsch", 6);

  auto result = run_cli("prepare-finetune --source flores:en-de:" + dir.file("f_en.txt") + ":" +
                        dir.file("f_de.txt") + " --source ntrex:en-de:" + dir.file("n_en.txt") +
                        ":" + dir.file("n_de.txt") + " --source wmt:en-de:" +
                        dir.file("w_en.txt") + ":" + dir.file("w_de.txt") + " --output-dir " +
                        dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto summary = result.summary();
  CHECK(summary["examples"] == 26);
  CHECK(summary["source_too_long"] == 0);
  CHECK(summary["cross_source_duplicates_removed"] == 0);

  auto stats = nlohmann::json::parse(testutil::read_file(summary["stats_path"].get<std::string>()));
  CHECK(stats["directions"]["en-de"] == 15);
  CHECK(stats["directions"]["de-en"] == 11);
  CHECK(stats["total"] == 26);

  const std::string jsonl = testutil::read_file(summary["examples_path"].get<std::string>());
  std::size_t line_count = 0;
  for (char c : jsonl) {
    line_count += c == '\n';
  }
  CHECK(line_count == 26);
  auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(first["prompt"] ==
        "Translate this from English to German:\nEnglish: flores english 0\nGerman:");
  CHECK(first["completion"] == " flores deutsch 0");
}

TEST_CASE("prepare-finetune honors exceptions and custom templates") {
  testutil::TempDir dir;
  write_numbered_lines(dir.file("n_en.txt"), "english", 3);
  write_numbered_lines(dir.file("n_fr.txt"), "francais", 3);
  testutil::write_file(dir.file("prompt.json"),
                       R"({"prompt": "{src_lang}>{tgt_lang}|{src_name}>{tgt_name}|{src_text}", "completion": "={tgt_text}"})");

  // Default exceptions keep en-fr bidirectional under the one-way origin.
  auto result = run_cli("prepare-finetune --source ntrex:en-fr:" + dir.file("n_en.txt") + ":" +
                        dir.file("n_fr.txt") + " --prompt-file " + dir.file("prompt.json") +
                        " --output-dir " + dir.path().string());
  REQUIRE(result.exit_code == 0);
  CHECK(result.summary()["examples"] == 6);
  const std::string jsonl =
      testutil::read_file(result.summary()["examples_path"].get<std::string>());
  auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(first["prompt"] == "en>fr|English>French|english 0");
  CHECK(first["completion"] == "=francais 0");

  // Dropping the default exceptions leaves only the English-out direction.
  auto stripped = run_cli("prepare-finetune --source ntrex:en-fr:" + dir.file("n_en.txt") + ":" +
                          dir.file("n_fr.txt") + " --no-default-exceptions --output-dir " +
                          dir.path().string() + " --name stripped");
  REQUIRE(stripped.exit_code == 0);
  CHECK(stripped.summary()["examples"] == 3);

  // A malformed template is a data error.
  testutil::write_file(dir.file("bad_prompt.json"), R"({"prompt": "x", "completion": "y"})");
  CHECK(run_cli("prepare-finetune --source ntrex:en-fr:" + dir.file("n_en.txt") + ":" +
                dir.file("n_fr.txt") + " --prompt-file " + dir.file("bad_prompt.json"))
            .exit_code == 2);
}

TEST_CASE("prepare-finetune extracts multi-parallel columns by pair") {
  testutil::TempDir dir;
  write_numbered_lines(dir.file("mp_en.txt"), "english", 7);
  write_numbered_lines(dir.file("mp_cs.txt"), "cesky", 7);
  write_numbered_lines(dir.file("mp_uk.txt"), "ukrainsky", 7);
  auto result = run_cli("prepare-finetune --flores en=" + dir.file("mp_en.txt") + " --flores cs=" +
                        dir.file("mp_cs.txt") + " --flores uk=" + dir.file("mp_uk.txt") +
                        " --pairs en-cs --pairs cs-uk --output-dir " + dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto stats = nlohmann::json::parse(testutil::read_file(result.summary()["stats_path"].get<std::string>()));
  CHECK(stats["directions"]["en-cs"] == 7);
  CHECK(stats["directions"]["cs-en"] == 7);
  CHECK(stats["directions"]["cs-uk"] == 7);
  CHECK(stats["directions"]["uk-cs"] == 7);
  CHECK(result.summary()["examples"] == 28);

  // --flores without --pairs is a usage error.
  CHECK(run_cli("prepare-finetune --flores en=" + dir.file("mp_en.txt")).exit_code == 1);
}

TEST_CASE("mix-pack requires an explicit seed and is reproducible") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("counts.json"), R"({"en": 100, "de": 64, "is": 1})");
  REQUIRE(run_cli("compute-plan --counts " + dir.file("counts.json") + " --output-dir " +
                  dir.path().string())
              .exit_code == 0);
  write_numbered_lines(dir.file("en.txt"), "english text", 40);
  write_numbered_lines(dir.file("de.txt"), "deutscher text", 40);
  write_numbered_lines(dir.file("is.txt"), "islenskur texti", 40);

  const std::string shards = " --shard en=" + dir.file("en.txt") + " --shard de=" +
                             dir.file("de.txt") + " --shard is=" + dir.file("is.txt");
  const std::string base_cmd = "mix-pack --plan " + dir.file("plan.json") + shards +
                               " --seq-len 64 --total-docs 500 --output-dir " +
                               dir.path().string();

  CHECK(run_cli(base_cmd).exit_code == 1);  // no seed

  auto first = run_cli(base_cmd + " --seed 7 --name run1");
  REQUIRE(first.exit_code == 0);
  auto summary = first.summary();
  CHECK(summary["documents"] == 500);
  CHECK(summary["seq_len"] == 64);
  const std::uint64_t input_tokens = summary["input_tokens"].get<std::uint64_t>();
  const std::uint64_t sequences = summary["sequences"].get<std::uint64_t>();
  const std::uint64_t dropped = summary["dropped_tokens"].get<std::uint64_t>();
  CHECK(input_tokens + 500 == 64 * sequences + dropped);

  auto second = run_cli(base_cmd + " --seed 7 --name run2");
  REQUIRE(second.exit_code == 0);
  CHECK(testutil::read_file(dir.file("run1.bin")) == testutil::read_file(dir.file("run2.bin")));

  auto other_seed = run_cli(base_cmd + " --seed 8 --name run3");
  REQUIRE(other_seed.exit_code == 0);
  CHECK(testutil::read_file(dir.file("run1.bin")) != testutil::read_file(dir.file("run3.bin")));

  auto packed = mtkit::stream_io::read_packed(dir.file("run1.bin"));
  CHECK(packed.seq_len == 64);
  CHECK(packed.sequences.size() == sequences);
}

TEST_CASE("mix-pack accepts a trained tokenizer") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("counts.json"), R"({"en": 1, "de": 8})");
  REQUIRE(run_cli("compute-plan --counts " + dir.file("counts.json") + " --output-dir " +
                  dir.path().string())
              .exit_code == 0);
  testutil::write_file(dir.file("corpus.txt"), "abab ab\nabab ab\n");
  REQUIRE(run_cli("train-vocab --input " + dir.file("corpus.txt") +
                  " --vocab-size 257 --name tok --output-dir " + dir.path().string())
              .exit_code == 0);
  write_numbered_lines(dir.file("en.txt"), "ab", 5);
  write_numbered_lines(dir.file("de.txt"), "abab", 5);

  auto result = run_cli("mix-pack --plan " + dir.file("plan.json") + " --shard en=" +
                        dir.file("en.txt") + " --shard de=" + dir.file("de.txt") + " --vocab " +
                        dir.file("tok.vocab.json") + " --merges " + dir.file("tok.merges.txt") +
                        " --seq-len 8 --total-docs 64 --seed 3 --output-dir " +
                        dir.path().string());
  REQUIRE(result.exit_code == 0);
  // Trained merges shrink documents, so the same draw count yields fewer
  // input tokens than the byte fallback would produce.
  const std::uint64_t tokens = result.summary()["input_tokens"].get<std::uint64_t>();
  CHECK(tokens < 64 * 7);  // byte length of the longest doc times draws
  // Only --vocab without --merges is a usage error.
  CHECK(run_cli("mix-pack --plan " + dir.file("plan.json") + " --shard de=" +
                dir.file("de.txt") + " --vocab " + dir.file("tok.vocab.json") +
                " --total-docs 4 --seed 1")
            .exit_code == 1);
}

TEST_CASE("emit-training-profile writes the published recipe") {
  testutil::TempDir dir;
  auto result = run_cli("emit-training-profile --output-dir " + dir.path().string());
  REQUIRE(result.exit_code == 0);
  auto profile = nlohmann::json::parse(
      testutil::read_file(result.summary()["profile_path"].get<std::string>()));

  const auto& pre = profile["continuous_pretraining"];
  CHECK(pre["duration"] == "60K steps");
  CHECK(pre["batch_size"] == 64);
  CHECK(pre["sequence_length"] == 2048);
  CHECK(pre["learning_rate"] == 2e-5);
  CHECK(pre["warmup_ratio"] == 0);
  CHECK(pre["weight_decay"] == 0.01);
  CHECK(pre["lr_scheduler"] == "cosine");
  CHECK(pre["training_type"] == "full finetuning");
  const auto& probs = pre["sampling_probability"];
  CHECK(probs["cs"] == 0.1);
  CHECK(probs["de"] == 0.13);
  CHECK(probs["en"] == 0.1);
  CHECK(probs["es"] == 0.13);
  CHECK(probs["hi"] == 0.08);
  CHECK(probs["is"] == 0.05);
  CHECK(probs["ja"] == 0.08);
  CHECK(probs["ru"] == 0.13);
  CHECK(probs["uk"] == 0.08);
  CHECK(probs["zh"] == 0.12);
  double sum = 0.0;
  for (const auto& [lang, p] : probs.items()) {
    sum += p.get<double>();
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  const auto& fine = profile["finetuning"];
  CHECK(fine["duration"] == "1 epoch");
  CHECK(fine["batch_size"] == 128);
  CHECK(fine["max_source_length"] == 512);
  CHECK(fine["max_target_length"] == 512);
  CHECK(fine["learning_rate"] == 2e-4);
  CHECK(fine["warmup_ratio"] == 0.01);
  CHECK(fine["weight_decay"] == 0.01);
  CHECK(fine["lr_scheduler"] == "inverse_sqrt");
  CHECK(fine["training_type"] == "LoRA r=64 for all layers");
}

TEST_CASE("outputs appear only at their final paths") {
  testutil::TempDir dir;
  auto result = run_cli("emit-training-profile --output-dir " + dir.path().string());
  REQUIRE(result.exit_code == 0);
  std::size_t entries = 0;
  bool temp_seen = false;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
    ++entries;
    temp_seen = temp_seen || entry.path().string().find(".tmp.") != std::string::npos;
  }
  CHECK(entries == 1);
  CHECK_FALSE(temp_seen);
}
