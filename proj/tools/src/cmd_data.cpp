#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "common.hpp"
#include "mtkit/bpe.hpp"
#include "mtkit/dataprep.hpp"
#include "mtkit/error.hpp"
#include "mtkit/sampling.hpp"
#include "mtkit/stream_io.hpp"

namespace mtkit::cli {

namespace {

struct MixPackOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::string plan_path;
  std::vector<std::string> shard_specs;  // lang=file
  std::string vocab_path;
  std::string merges_path;
  std::uint32_t seq_len = 2048;
  std::uint64_t total_docs = 0;
  std::string name = "packed";

  CLI::Option* seed_opt = nullptr;
  CLI::Option* plan_opt = nullptr;
  CLI::Option* shard_opt = nullptr;
  CLI::Option* vocab_opt = nullptr;
  CLI::Option* merges_opt = nullptr;
  CLI::Option* seq_len_opt = nullptr;
  CLI::Option* total_docs_opt = nullptr;
  CLI::Option* name_opt = nullptr;
  CLI::Option* output_dir_opt = nullptr;
};

void run_mix_pack(const MixPackOpts& opts) {
  ConfigView config(load_config(opts.config_path));
  auto o = opts;
  config.apply(opts.plan_opt, "plan", o.plan_path);
  config.apply(opts.shard_opt, "shard", o.shard_specs);
  config.apply(opts.vocab_opt, "vocab", o.vocab_path);
  config.apply(opts.merges_opt, "merges", o.merges_path);
  config.apply(opts.seq_len_opt, "seq_len", o.seq_len);
  config.apply(opts.total_docs_opt, "total_docs", o.total_docs);
  config.apply(opts.name_opt, "name", o.name);
  config.apply(opts.output_dir_opt, "output_dir", o.output_dir);
  config.apply(opts.seed_opt, "seed", o.seed);

  // Reproducibility of the mixed stream hinges on the seed, so an implicit
  // default is not acceptable here.
  if (opts.seed_opt->count() == 0 && !config.has("seed")) {
    throw UsageError("mix-pack requires an explicit --seed");
  }
  if (o.plan_path.empty()) {
    throw UsageError("--plan is required");
  }
  if (o.shard_specs.empty()) {
    throw UsageError("at least one --shard lang=file is required");
  }
  if (o.total_docs == 0) {
    throw UsageError("--total-docs must be positive");
  }
  if (o.seq_len == 0) {
    throw UsageError("--seq-len must be positive");
  }

  sampling::SamplingPlan plan = sampling::plan_from_json(read_file(o.plan_path));
  plan.validate();
  std::map<std::string, std::vector<std::string>> shards;
  for (const auto& spec : o.shard_specs) {
    auto [lang, path] = split_spec(spec, '=', "--shard");
    shards[lang] = read_lines(path);
  }
  bpe::Tokenizer tokenizer = load_tokenizer(o.vocab_path, o.merges_path);

  sampling::MixResult mix = sampling::mix_corpus(plan, shards, o.seed, o.total_docs);

  ensure_output_dir(o.output_dir);
  const std::string packed_path = join_path(o.output_dir, o.name + ".bin");
  const std::string temp_path = temp_sibling(packed_path);
  sampling::PackStats stats;
  {
    stream_io::PackedFileWriter writer(temp_path, o.seq_len);
    sampling::SequencePacker packer(
        o.seq_len, tokenizer.reserved_eod_id(),
        [&](std::span<const std::uint32_t> seq) { writer.write(seq); });
    for (const auto& doc : mix.documents) {
      packer.add_document(tokenizer.encode(doc.textdata));
    }
    stats = packer.finish();
    writer.close();
  }
  commit_file(temp_path, packed_path);

  nlohmann::json draws = nlohmann::json::object();
  for (const auto& [lang, n] : mix.draws) {
    draws[lang] = n;
  }
  nlohmann::json epochs = nlohmann::json::object();
  for (const auto& [lang, n] : mix.epochs) {
    epochs[lang] = n;
  }
  print_summary({{"command", "mix-pack"},
                 {"seed", o.seed},
                 {"documents", stats.documents},
                 {"input_tokens", stats.input_tokens},
                 {"sequences", stats.sequences},
                 {"dropped_tokens", stats.dropped_tokens},
                 {"seq_len", o.seq_len},
                 {"draws", draws},
                 {"epochs", epochs},
                 {"packed_path", packed_path}});
}

struct PrepareFinetuneOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::vector<std::string> source_specs;  // origin:pair:srcfile:tgtfile
  std::vector<std::string> flores_specs;  // lang=file (multi-parallel columns)
  std::vector<std::string> pair_specs;    // en-de (for --flores ingestion)
  std::vector<std::string> exceptions;    // bidirectional exceptions
  bool no_default_exceptions = false;
  std::string english_code = "en";
  std::string vocab_path;
  std::string merges_path;
  std::uint64_t max_source_length = 512;
  std::uint64_t max_target_length = 512;
  std::string prompt_file;
  bool keep_cross_source_duplicates = false;
  std::string name = "finetune";

  CLI::Option* source_opt = nullptr;
  CLI::Option* flores_opt = nullptr;
  CLI::Option* pairs_opt = nullptr;
  CLI::Option* exceptions_opt = nullptr;
  CLI::Option* no_default_exceptions_opt = nullptr;
  CLI::Option* english_code_opt = nullptr;
  CLI::Option* vocab_opt = nullptr;
  CLI::Option* merges_opt = nullptr;
  CLI::Option* max_source_opt = nullptr;
  CLI::Option* max_target_opt = nullptr;
  CLI::Option* prompt_file_opt = nullptr;
  CLI::Option* keep_dups_opt = nullptr;
  CLI::Option* name_opt = nullptr;
  CLI::Option* output_dir_opt = nullptr;
};

// "origin:pair:srcfile:tgtfile", e.g. "wmt:en-de:english.txt:german.txt".
std::vector<dataprep::ParallelRecord> ingest_source_spec(const std::string& spec) {
  auto [origin_str, rest] = split_spec(spec, ':', "--source");
  auto [pair_str, files] = split_spec(rest, ':', "--source");
  auto [src_file, tgt_file] = split_spec(files, ':', "--source");
  dataprep::Origin origin = dataprep::origin_from_string(origin_str);
  dataprep::LanguagePair pair = dataprep::LanguagePair::parse(pair_str);
  return dataprep::ingest_directional(read_lines(src_file), read_lines(tgt_file), pair.a, pair.b,
                                      origin);
}

void run_prepare_finetune(const PrepareFinetuneOpts& opts) {
  ConfigView config(load_config(opts.config_path));
  auto o = opts;
  config.apply(opts.source_opt, "source", o.source_specs);
  config.apply(opts.flores_opt, "flores", o.flores_specs);
  config.apply(opts.pairs_opt, "pairs", o.pair_specs);
  config.apply(opts.exceptions_opt, "exception", o.exceptions);
  config.apply(opts.no_default_exceptions_opt, "no_default_exceptions",
               o.no_default_exceptions);
  config.apply(opts.english_code_opt, "english_code", o.english_code);
  config.apply(opts.vocab_opt, "vocab", o.vocab_path);
  config.apply(opts.merges_opt, "merges", o.merges_path);
  config.apply(opts.max_source_opt, "max_source_length", o.max_source_length);
  config.apply(opts.max_target_opt, "max_target_length", o.max_target_length);
  config.apply(opts.prompt_file_opt, "prompt_file", o.prompt_file);
  config.apply(opts.keep_dups_opt, "keep_cross_source_duplicates",
               o.keep_cross_source_duplicates);
  config.apply(opts.name_opt, "name", o.name);
  config.apply(opts.output_dir_opt, "output_dir", o.output_dir);

  if (o.source_specs.empty() && o.flores_specs.empty()) {
    throw UsageError("prepare-finetune needs --source and/or --flores inputs");
  }

  dataprep::DirectionPolicy policy;
  policy.english_code = o.english_code;
  if (!o.no_default_exceptions) {
    policy = dataprep::DirectionPolicy::defaults();
    policy.english_code = o.english_code;
  }
  for (const auto& spec : o.exceptions) {
    policy.add_exception(dataprep::LanguagePair::parse(spec));
  }

  std::vector<dataprep::ParallelRecord> records;
  for (const auto& spec : o.source_specs) {
    auto batch = ingest_source_spec(spec);
    records.insert(records.end(), batch.begin(), batch.end());
  }
  if (!o.flores_specs.empty()) {
    efficiency::MultiParallelCorpus corpus;
    for (const auto& spec : o.flores_specs) {
      auto [lang, path] = split_spec(spec, '=', "--flores");
      if (lang == o.english_code) {
        corpus.english = read_lines(path);
      } else {
        corpus.translations[lang] = read_lines(path);
      }
    }
    std::vector<dataprep::LanguagePair> pairs;
    if (o.pair_specs.empty()) {
      throw UsageError("--flores requires --pairs to state which pairs to extract");
    }
    for (const auto& spec : o.pair_specs) {
      pairs.push_back(dataprep::LanguagePair::parse(spec));
    }
    auto batch = dataprep::ingest_multiparallel(corpus, pairs, o.english_code);
    records.insert(records.end(), batch.begin(), batch.end());
  }

  records = dataprep::apply_policy(records, policy);
  std::uint64_t cross_source_removed = 0;
  if (!o.keep_cross_source_duplicates) {
    cross_source_removed = dataprep::dedup_cross_source(records);
  }

  dataprep::PromptTemplate tmpl;
  if (!o.prompt_file.empty()) {
    try {
      nlohmann::json spec = nlohmann::json::parse(read_file(o.prompt_file));
      tmpl.prompt = spec.at("prompt").get<std::string>();
      tmpl.completion = spec.at("completion").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("prompt file " + o.prompt_file + ": " + e.what());
    }
  }
  tmpl.validate();

  bpe::Tokenizer tokenizer = load_tokenizer(o.vocab_path, o.merges_path);
  auto [examples, rejections] =
      dataprep::format_examples(records, tmpl, tokenizer, o.max_source_length,
                                o.max_target_length);

  dataprep::StatsTable stats;
  for (const auto& ex : examples) {
    ++stats.counts[{ex.src_lang, ex.tgt_lang}];
    ++stats.total;
  }

  ensure_output_dir(o.output_dir);
  const std::string examples_path = join_path(o.output_dir, o.name + ".jsonl");
  const std::string stats_path = join_path(o.output_dir, o.name + ".stats.json");
  atomic_write(examples_path, dataprep::examples_jsonl(examples));

  nlohmann::json stats_doc = nlohmann::json::parse(dataprep::stats_json(stats));
  stats_doc["source_too_long"] = rejections.source_too_long;
  stats_doc["target_too_long"] = rejections.target_too_long;
  stats_doc["cross_source_duplicates_removed"] = cross_source_removed;
  atomic_write(stats_path, stats_doc.dump(2) + "\n");
  std::cerr << dataprep::stats_text(stats, o.english_code);

  print_summary({{"command", "prepare-finetune"},
                 {"examples", rejections.accepted},
                 {"source_too_long", rejections.source_too_long},
                 {"target_too_long", rejections.target_too_long},
                 {"cross_source_duplicates_removed", cross_source_removed},
                 {"examples_path", examples_path},
                 {"stats_path", stats_path}});
}

struct ProfileOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::string name = "training_profile";

  CLI::Option* name_opt = nullptr;
  CLI::Option* output_dir_opt = nullptr;
};

// The published training recipe, emitted as data for downstream trainers;
// nothing here is executed by this toolkit.
nlohmann::json training_profile() {
  return nlohmann::json{
      {"continuous_pretraining",
       {{"sampling_probability",
         {{"cs", 0.1},
          {"de", 0.13},
          {"en", 0.1},
          {"es", 0.13},
          {"hi", 0.08},
          {"is", 0.05},
          {"ja", 0.08},
          {"ru", 0.13},
          {"uk", 0.08},
          {"zh", 0.12}}},
        {"duration", "60K steps"},
        {"batch_size", 64},
        {"sequence_length", 2048},
        {"learning_rate", 2e-5},
        {"warmup_ratio", 0},
        {"weight_decay", 0.01},
        {"lr_scheduler", "cosine"},
        {"training_type", "full finetuning"}}},
      {"finetuning",
       {{"duration", "1 epoch"},
        {"batch_size", 128},
        {"max_source_length", 512},
        {"max_target_length", 512},
        {"learning_rate", 2e-4},
        {"warmup_ratio", 0.01},
        {"weight_decay", 0.01},
        {"lr_scheduler", "inverse_sqrt"},
        {"training_type", "LoRA r=64 for all layers"}}}};
}

void run_emit_profile(const ProfileOpts& opts) {
  ConfigView config(load_config(opts.config_path));
  auto o = opts;
  config.apply(opts.name_opt, "name", o.name);
  config.apply(opts.output_dir_opt, "output_dir", o.output_dir);

  ensure_output_dir(o.output_dir);
  const std::string profile_path = join_path(o.output_dir, o.name + ".json");
  atomic_write(profile_path, training_profile().dump(2) + "\n");
  print_summary({{"command", "emit-training-profile"}, {"profile_path", profile_path}});
}

}  // namespace

void register_data_commands(CLI::App& app) {
  auto mix_opts = std::make_shared<MixPackOpts>();
  auto* mix = app.add_subcommand(
      "mix-pack", "Sample a mixed corpus from a plan and pack it into fixed-length sequences");
  mix->add_option("--config", mix_opts->config_path, "JSON config file (flags win)");
  mix_opts->output_dir_opt =
      mix->add_option("--output-dir", mix_opts->output_dir, "Directory for outputs");
  mix_opts->seed_opt =
      mix->add_option("--seed", mix_opts->seed, "Mixer seed (required, no default)");
  mix_opts->plan_opt = mix->add_option("--plan", mix_opts->plan_path, "Sampling plan JSON");
  mix_opts->shard_opt = mix->add_option(
      "--shard", mix_opts->shard_specs, "Per-language shard as lang=file (repeatable)");
  mix_opts->vocab_opt = mix->add_option(
      "--vocab", mix_opts->vocab_path, "Tokenizer vocab (omit for byte-level fallback)");
  mix_opts->merges_opt = mix->add_option(
      "--merges", mix_opts->merges_path, "Tokenizer merges (omit for byte-level fallback)");
  mix_opts->seq_len_opt =
      mix->add_option("--seq-len", mix_opts->seq_len, "Packed sequence length");
  mix_opts->total_docs_opt =
      mix->add_option("--total-docs", mix_opts->total_docs, "Number of documents to draw");
  mix_opts->name_opt = mix->add_option("--name", mix_opts->name, "Output file prefix");
  mix->callback([mix_opts]() { run_mix_pack(*mix_opts); });

  auto prep_opts = std::make_shared<PrepareFinetuneOpts>();
  auto* prep = app.add_subcommand(
      "prepare-finetune", "Build a prompt/completion fine-tuning set from parallel corpora");
  prep->add_option("--config", prep_opts->config_path, "JSON config file (flags win)");
  prep_opts->output_dir_opt =
      prep->add_option("--output-dir", prep_opts->output_dir, "Directory for outputs");
  prep->add_option("--seed", prep_opts->seed, "Unused; accepted for interface uniformity");
  prep_opts->source_opt = prep->add_option(
      "--source", prep_opts->source_specs,
      "Directional corpus as origin:src-tgt:srcfile:tgtfile (repeatable)");
  prep_opts->flores_opt = prep->add_option(
      "--flores", prep_opts->flores_specs,
      "Multi-parallel column as lang=file (repeatable; needs --pairs)");
  prep_opts->pairs_opt = prep->add_option(
      "--pairs", prep_opts->pair_specs, "Pairs to extract from --flores columns (repeatable)");
  prep_opts->exceptions_opt = prep->add_option(
      "--exception", prep_opts->exceptions,
      "Pair kept bidirectional for single-direction origins (repeatable)");
  prep_opts->no_default_exceptions_opt = prep->add_flag(
      "--no-default-exceptions", prep_opts->no_default_exceptions,
      "Start from an empty exception set instead of the shipped default");
  prep_opts->english_code_opt =
      prep->add_option("--english-code", prep_opts->english_code, "English language code");
  prep_opts->vocab_opt = prep->add_option(
      "--vocab", prep_opts->vocab_path, "Tokenizer vocab for length limits");
  prep_opts->merges_opt = prep->add_option(
      "--merges", prep_opts->merges_path, "Tokenizer merges for length limits");
  prep_opts->max_source_opt = prep->add_option(
      "--max-source-length", prep_opts->max_source_length, "Inclusive prompt token limit");
  prep_opts->max_target_opt = prep->add_option(
      "--max-target-length", prep_opts->max_target_length, "Inclusive completion token limit");
  prep_opts->prompt_file_opt = prep->add_option(
      "--prompt-file", prep_opts->prompt_file,
      "JSON file with 'prompt' and 'completion' templates");
  prep_opts->keep_dups_opt = prep->add_flag(
      "--keep-cross-source-duplicates", prep_opts->keep_cross_source_duplicates,
      "Skip the cross-origin duplicate removal pass");
  prep_opts->name_opt = prep->add_option("--name", prep_opts->name, "Output file prefix");
  prep->callback([prep_opts]() { run_prepare_finetune(*prep_opts); });

  auto profile_opts = std::make_shared<ProfileOpts>();
  auto* profile = app.add_subcommand(
      "emit-training-profile", "Write the published training hyperparameters as JSON");
  profile->add_option("--config", profile_opts->config_path, "JSON config file (flags win)");
  profile_opts->output_dir_opt =
      profile->add_option("--output-dir", profile_opts->output_dir, "Directory for outputs");
  profile->add_option("--seed", profile_opts->seed,
                      "Unused; accepted for interface uniformity");
  profile_opts->name_opt =
      profile->add_option("--name", profile_opts->name, "Output file prefix");
  profile->callback([profile_opts]() { run_emit_profile(*profile_opts); });
}

}  // namespace mtkit::cli
