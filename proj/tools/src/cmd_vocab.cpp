#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "common.hpp"
#include "mtkit/bpe.hpp"
#include "mtkit/error.hpp"
#include "mtkit/vocab_ops.hpp"

namespace mtkit::cli {

namespace {

struct TrainVocabOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;  // accepted for interface uniformity; training is deterministic
  std::vector<std::string> inputs;
  std::vector<std::string> lang_specs;
  std::size_t vocab_size = 12000;
  std::uint64_t min_frequency = 2;
  bool nfc = false;
  std::string name = "tokenizer";

  CLI::Option* inputs_opt = nullptr;
  CLI::Option* lang_opt = nullptr;
  CLI::Option* vocab_size_opt = nullptr;
  CLI::Option* min_frequency_opt = nullptr;
  CLI::Option* nfc_opt = nullptr;
  CLI::Option* name_opt = nullptr;
  CLI::Option* output_dir_opt = nullptr;
};

// Streams every input file line by line so training never holds a corpus in
// memory; returns the document count.
std::uint64_t stream_documents(const std::vector<std::string>& paths,
                               const bpe::TrainParams& params, bpe::Tokenizer& out) {
  std::uint64_t documents = 0;
  std::size_t file_index = 0;
  std::unique_ptr<std::ifstream> current;
  bpe::DocumentSource source = [&](std::string& doc) {
    for (;;) {
      if (!current) {
        if (file_index >= paths.size()) {
          return false;
        }
        current = std::make_unique<std::ifstream>(paths[file_index], std::ios::binary);
        if (!*current) {
          throw Error("cannot open " + paths[file_index]);
        }
        ++file_index;
      }
      if (std::getline(*current, doc)) {
        if (!doc.empty() && doc.back() == '\r') {
          doc.pop_back();
        }
        ++documents;
        return true;
      }
      current.reset();
    }
  };
  out = bpe::train_bpe(source, params);
  return documents;
}

void run_train_vocab(const TrainVocabOpts& opts) {
  ConfigView config(load_config(opts.config_path));
  auto o = opts;
  config.apply(opts.inputs_opt, "input", o.inputs);
  config.apply(opts.lang_opt, "lang", o.lang_specs);
  config.apply(opts.vocab_size_opt, "vocab_size", o.vocab_size);
  config.apply(opts.min_frequency_opt, "min_frequency", o.min_frequency);
  config.apply(opts.nfc_opt, "nfc", o.nfc);
  config.apply(opts.name_opt, "name", o.name);
  config.apply(opts.output_dir_opt, "output_dir", o.output_dir);

  if (o.inputs.empty() == o.lang_specs.empty()) {
    throw UsageError("train-vocab needs either --input or --lang (not both)");
  }
  bpe::TrainParams params;
  params.target_vocab_size = o.vocab_size;
  params.min_pair_frequency = o.min_frequency;
  params.normalization = o.nfc ? bpe::Normalization::nfc : bpe::Normalization::identity;

  ensure_output_dir(o.output_dir);
  const std::string vocab_path = join_path(o.output_dir, o.name + ".vocab.json");
  const std::string merges_path = join_path(o.output_dir, o.name + ".merges.txt");

  nlohmann::json summary = {{"command", "train-vocab"},
                            {"vocab_path", vocab_path},
                            {"merges_path", merges_path}};
  bpe::Tokenizer tokenizer;
  if (!o.inputs.empty()) {
    summary["documents"] = stream_documents(o.inputs, params, tokenizer);
  } else {
    std::map<std::string, std::vector<std::string>> corpora;
    for (const auto& spec : o.lang_specs) {
      auto [lang, path] = split_spec(spec, '=', "--lang");
      auto docs = read_lines(path);
      auto& bucket = corpora[lang];
      bucket.insert(bucket.end(), docs.begin(), docs.end());
    }
    auto result =
        vocab_ops::train_extension_vocab(corpora, o.vocab_size, o.min_frequency,
                                         params.normalization);
    tokenizer = std::move(result.tokenizer);
    std::uint64_t documents = 0;
    nlohmann::json per_language = nlohmann::json::object();
    for (const auto& [lang, count] : result.per_language_docs) {
      per_language[lang] = count;
      documents += count;
    }
    summary["documents"] = documents;
    summary["per_language_documents"] = per_language;
  }

  atomic_write(vocab_path, tokenizer.vocab_json());
  atomic_write(merges_path, tokenizer.merges_text());
  summary["vocab_size"] = tokenizer.vocab_size();
  summary["merges"] = tokenizer.merges().size();
  print_summary(summary);
}

struct MergeVocabOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::string base_vocab;
  std::string base_merges;
  std::string ext_vocab;
  std::string ext_merges;
  std::string name = "merged";

  CLI::Option* base_vocab_opt = nullptr;
  CLI::Option* base_merges_opt = nullptr;
  CLI::Option* ext_vocab_opt = nullptr;
  CLI::Option* ext_merges_opt = nullptr;
  CLI::Option* name_opt = nullptr;
  CLI::Option* output_dir_opt = nullptr;
};

void run_merge_vocab(const MergeVocabOpts& opts) {
  ConfigView config(load_config(opts.config_path));
  auto o = opts;
  config.apply(opts.base_vocab_opt, "base_vocab", o.base_vocab);
  config.apply(opts.base_merges_opt, "base_merges", o.base_merges);
  config.apply(opts.ext_vocab_opt, "ext_vocab", o.ext_vocab);
  config.apply(opts.ext_merges_opt, "ext_merges", o.ext_merges);
  config.apply(opts.name_opt, "name", o.name);
  config.apply(opts.output_dir_opt, "output_dir", o.output_dir);
  const std::pair<const std::string*, const char*> required[] = {
      {&o.base_vocab, "--base-vocab"},
      {&o.base_merges, "--base-merges"},
      {&o.ext_vocab, "--ext-vocab"},
      {&o.ext_merges, "--ext-merges"}};
  for (const auto& [value, flag] : required) {
    if (value->empty()) {
      throw UsageError(std::string(flag) + " is required");
    }
  }

  bpe::Tokenizer base = bpe::Tokenizer::load(o.base_vocab, o.base_merges);
  bpe::Tokenizer ext = bpe::Tokenizer::load(o.ext_vocab, o.ext_merges);
  auto [merged, report] = vocab_ops::merge_vocabularies(base, ext);

  ensure_output_dir(o.output_dir);
  const std::string vocab_path = join_path(o.output_dir, o.name + ".vocab.json");
  const std::string merges_path = join_path(o.output_dir, o.name + ".merges.txt");
  const std::string report_path = join_path(o.output_dir, o.name + ".report.json");
  atomic_write(vocab_path, merged.vocab_json());
  atomic_write(merges_path, merged.merges_text());
  atomic_write(report_path, vocab_ops::report_json(report) + "\n");

  print_summary({{"command", "merge-vocab"},
                 {"vocab_size", merged.vocab_size()},
                 {"added_tokens", report.added_tokens},
                 {"skipped_duplicates", report.skipped_duplicates},
                 {"added_merges", report.added_merges},
                 {"skipped_merges", report.skipped_merges},
                 {"vocab_path", vocab_path},
                 {"merges_path", merges_path},
                 {"report_path", report_path}});
}

}  // namespace

void register_vocab_commands(CLI::App& app) {
  auto train_opts = std::make_shared<TrainVocabOpts>();
  auto* train = app.add_subcommand("train-vocab", "Train a byte-level BPE tokenizer");
  train->add_option("--config", train_opts->config_path, "JSON config file (flags win)");
  train_opts->output_dir_opt =
      train->add_option("--output-dir", train_opts->output_dir, "Directory for outputs");
  train->add_option("--seed", train_opts->seed, "Unused; accepted for interface uniformity");
  train_opts->inputs_opt = train->add_option(
      "--input", train_opts->inputs, "Corpus text file, one document per line (repeatable)");
  train_opts->lang_opt = train->add_option(
      "--lang", train_opts->lang_specs,
      "Per-language corpus as code=file; trains on the round-robin union (repeatable)");
  train_opts->vocab_size_opt =
      train->add_option("--vocab-size", train_opts->vocab_size, "Target vocabulary size");
  train_opts->min_frequency_opt = train->add_option("--min-frequency",
                                                    train_opts->min_frequency,
                                                    "Minimum pair frequency to merge");
  train_opts->nfc_opt =
      train->add_flag("--nfc", train_opts->nfc, "Apply NFC normalization to training text");
  train_opts->name_opt =
      train->add_option("--name", train_opts->name, "Output file prefix");
  train->callback([train_opts]() { run_train_vocab(*train_opts); });

  auto merge_opts = std::make_shared<MergeVocabOpts>();
  auto* merge =
      app.add_subcommand("merge-vocab", "Append an extension vocabulary to a base tokenizer");
  merge->add_option("--config", merge_opts->config_path, "JSON config file (flags win)");
  merge_opts->output_dir_opt =
      merge->add_option("--output-dir", merge_opts->output_dir, "Directory for outputs");
  merge->add_option("--seed", merge_opts->seed, "Unused; accepted for interface uniformity");
  merge_opts->base_vocab_opt =
      merge->add_option("--base-vocab", merge_opts->base_vocab, "Base vocab JSON");
  merge_opts->base_merges_opt =
      merge->add_option("--base-merges", merge_opts->base_merges, "Base merges file");
  merge_opts->ext_vocab_opt =
      merge->add_option("--ext-vocab", merge_opts->ext_vocab, "Extension vocab JSON");
  merge_opts->ext_merges_opt =
      merge->add_option("--ext-merges", merge_opts->ext_merges, "Extension merges file");
  merge_opts->name_opt = merge->add_option("--name", merge_opts->name, "Output file prefix");
  merge->callback([merge_opts]() { run_merge_vocab(*merge_opts); });
}

}  // namespace mtkit::cli
