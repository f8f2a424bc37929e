#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "common.hpp"
#include "mtkit/bpe.hpp"
#include "mtkit/efficiency.hpp"
#include "mtkit/error.hpp"
#include "mtkit/sampling.hpp"

namespace mtkit::cli {

namespace {

struct AnalyzeOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::string english_path;
  std::vector<std::string> translation_specs;  // lang=file
  std::vector<std::string> tokenizer_specs;    // name=vocab,merges
  std::string mode = "newline";
  std::string corpus_id;
  std::string name = "efficiency";

  CLI::Option* english_opt = nullptr;
  CLI::Option* translation_opt = nullptr;
  CLI::Option* tokenizer_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* corpus_id_opt = nullptr;
  CLI::Option* name_opt = nullptr;
  CLI::Option* output_dir_opt = nullptr;
};

void run_analyze(const AnalyzeOpts& opts) {
  ConfigView config(load_config(opts.config_path));
  auto o = opts;
  config.apply(opts.english_opt, "english", o.english_path);
  config.apply(opts.translation_opt, "translation", o.translation_specs);
  config.apply(opts.tokenizer_opt, "tokenizer", o.tokenizer_specs);
  config.apply(opts.mode_opt, "mode", o.mode);
  config.apply(opts.corpus_id_opt, "corpus_id", o.corpus_id);
  config.apply(opts.name_opt, "name", o.name);
  config.apply(opts.output_dir_opt, "output_dir", o.output_dir);

  if (o.english_path.empty()) {
    throw UsageError("--english is required");
  }
  if (o.translation_specs.empty()) {
    throw UsageError("at least one --translation lang=file is required");
  }
  if (o.tokenizer_specs.empty()) {
    throw UsageError("at least one --tokenizer name=vocab,merges is required");
  }
  efficiency::ConcatMode mode;
  if (o.mode == "newline") {
    mode = efficiency::ConcatMode::newline_join;
  } else if (o.mode == "sum") {
    mode = efficiency::ConcatMode::sum_sentences;
  } else {
    throw UsageError("--mode must be 'newline' or 'sum', got '" + o.mode + "'");
  }

  efficiency::MultiParallelCorpus corpus;
  corpus.english = read_lines(o.english_path);
  for (const auto& spec : o.translation_specs) {
    auto [lang, path] = split_spec(spec, '=', "--translation");
    corpus.translations[lang] = read_lines(path);
  }

  std::map<std::string, bpe::Tokenizer> owned;
  for (const auto& spec : o.tokenizer_specs) {
    auto [tok_name, paths] = split_spec(spec, '=', "--tokenizer");
    auto [vocab_path, merges_path] = split_spec(paths, ',', "--tokenizer");
    owned.emplace(tok_name, bpe::Tokenizer::load(vocab_path, merges_path));
  }
  std::map<std::string, const bpe::Tokenizer*> tokenizers;
  for (const auto& [tok_name, tok] : owned) {
    tokenizers[tok_name] = &tok;
  }

  efficiency::EfficiencyReport report = efficiency::analyze(tokenizers, corpus, mode, o.corpus_id);

  ensure_output_dir(o.output_dir);
  const std::string csv_path = join_path(o.output_dir, o.name + ".csv");
  const std::string json_path = join_path(o.output_dir, o.name + ".json");
  atomic_write(csv_path, efficiency::emit_csv(report));
  atomic_write(json_path, efficiency::emit_json(report) + "\n");
  std::cerr << efficiency::format_table(report);

  print_summary({{"command", "analyze-efficiency"},
                 {"entries", report.entries.size()},
                 {"sentences", corpus.english.size()},
                 {"csv_path", csv_path},
                 {"json_path", json_path}});
}

struct ComputePlanOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::string counts_path;
  std::vector<std::string> corpus_specs;  // lang=file
  double temperature = 6.0;
  double english_share = 0.1;
  std::string english_code = "en";
  std::string name = "plan";

  CLI::Option* counts_opt = nullptr;
  CLI::Option* corpus_opt = nullptr;
  CLI::Option* temperature_opt = nullptr;
  CLI::Option* english_share_opt = nullptr;
  CLI::Option* english_code_opt = nullptr;
  CLI::Option* name_opt = nullptr;
  CLI::Option* output_dir_opt = nullptr;
};

void run_compute_plan(const ComputePlanOpts& opts) {
  ConfigView config(load_config(opts.config_path));
  auto o = opts;
  config.apply(opts.counts_opt, "counts", o.counts_path);
  config.apply(opts.corpus_opt, "corpus", o.corpus_specs);
  config.apply(opts.temperature_opt, "temperature", o.temperature);
  config.apply(opts.english_share_opt, "english_share", o.english_share);
  config.apply(opts.english_code_opt, "english_code", o.english_code);
  config.apply(opts.name_opt, "name", o.name);
  config.apply(opts.output_dir_opt, "output_dir", o.output_dir);

  if (o.counts_path.empty() == o.corpus_specs.empty()) {
    throw UsageError("compute-plan needs either --counts or --corpus (not both)");
  }

  sampling::LanguageStats stats;
  stats.english_code = o.english_code;
  if (!o.counts_path.empty()) {
    nlohmann::json counts;
    try {
      counts = nlohmann::json::parse(read_file(o.counts_path));
      if (!counts.is_object()) {
        throw Error("counts file " + o.counts_path + ": expected an object of language -> words");
      }
      for (const auto& [lang, value] : counts.items()) {
        stats.word_counts[lang] = value.get<std::uint64_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error("counts file " + o.counts_path + ": " + e.what());
    }
  } else {
    for (const auto& spec : o.corpus_specs) {
      auto [lang, path] = split_spec(spec, '=', "--corpus");
      auto docs = read_lines(path);
      stats.word_counts[lang] += sampling::count_words(docs);
    }
  }

  sampling::SamplingPlan plan = sampling::compute_plan(stats, o.temperature, o.english_share);
  plan.validate();

  ensure_output_dir(o.output_dir);
  const std::string plan_path = join_path(o.output_dir, o.name + ".json");
  atomic_write(plan_path, sampling::plan_json(plan) + "\n");

  print_summary({{"command", "compute-plan"},
                 {"languages", plan.probabilities.size()},
                 {"temperature", plan.temperature},
                 {"english", plan.english_share},
                 {"plan_path", plan_path}});
}

}  // namespace

void register_analysis_commands(CLI::App& app) {
  auto analyze_opts = std::make_shared<AnalyzeOpts>();
  auto* analyze = app.add_subcommand(
      "analyze-efficiency", "Measure per-language token length ratios against English");
  analyze->add_option("--config", analyze_opts->config_path, "JSON config file (flags win)");
  analyze_opts->output_dir_opt =
      analyze->add_option("--output-dir", analyze_opts->output_dir, "Directory for outputs");
  analyze->add_option("--seed", analyze_opts->seed, "Unused; accepted for interface uniformity");
  analyze_opts->english_opt = analyze->add_option(
      "--english", analyze_opts->english_path, "English side, one sentence per line");
  analyze_opts->translation_opt = analyze->add_option(
      "--translation", analyze_opts->translation_specs,
      "Aligned translation as lang=file (repeatable)");
  analyze_opts->tokenizer_opt = analyze->add_option(
      "--tokenizer", analyze_opts->tokenizer_specs,
      "Tokenizer under test as name=vocab.json,merges.txt (repeatable)");
  analyze_opts->mode_opt = analyze->add_option(
      "--mode", analyze_opts->mode, "Corpus concatenation: 'newline' or 'sum'");
  analyze_opts->corpus_id_opt =
      analyze->add_option("--corpus-id", analyze_opts->corpus_id, "Label stored in the report");
  analyze_opts->name_opt =
      analyze->add_option("--name", analyze_opts->name, "Output file prefix");
  analyze->callback([analyze_opts]() { run_analyze(*analyze_opts); });

  auto plan_opts = std::make_shared<ComputePlanOpts>();
  auto* plan = app.add_subcommand(
      "compute-plan", "Compute the temperature-based language sampling plan");
  plan->add_option("--config", plan_opts->config_path, "JSON config file (flags win)");
  plan_opts->output_dir_opt =
      plan->add_option("--output-dir", plan_opts->output_dir, "Directory for outputs");
  plan->add_option("--seed", plan_opts->seed, "Unused; accepted for interface uniformity");
  plan_opts->counts_opt = plan->add_option(
      "--counts", plan_opts->counts_path, "JSON object of language -> word count");
  plan_opts->corpus_opt = plan->add_option(
      "--corpus", plan_opts->corpus_specs,
      "Count words from lang=file instead of --counts (repeatable)");
  plan_opts->temperature_opt =
      plan->add_option("--temperature", plan_opts->temperature, "Sampling temperature");
  plan_opts->english_share_opt = plan->add_option(
      "--english-share", plan_opts->english_share, "Fixed English probability");
  plan_opts->english_code_opt =
      plan->add_option("--english-code", plan_opts->english_code, "Code of the fixed language");
  plan_opts->name_opt = plan->add_option("--name", plan_opts->name, "Output file prefix");
  plan->callback([plan_opts]() { run_compute_plan(*plan_opts); });
}

}  // namespace mtkit::cli
