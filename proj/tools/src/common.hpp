#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtkit/bpe.hpp"

namespace mtkit::cli {

// Bad flag combinations and missing required inputs (exit code 1), as
// opposed to mtkit::Error for bad data (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses the JSON config file; an empty path yields an empty object.
nlohmann::json load_config(const std::string& path);

// Config values act as defaults: a key applies only when the matching flag
// was not passed on the command line.
class ConfigView {
 public:
  explicit ConfigView(nlohmann::json values) : values_(std::move(values)) {}

  template <typename T>
  void apply(const CLI::Option* opt, const std::string& key, T& value) const {
    if (opt != nullptr && opt->count() > 0) {
      return;
    }
    if (!values_.contains(key)) {
      return;
    }
    try {
      value = values_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }

  bool has(const std::string& key) const { return values_.contains(key); }

 private:
  nlohmann::json values_;
};

std::string read_file(const std::string& path);
// One document per line; strips a trailing '\r' from each line.
std::vector<std::string> read_lines(const std::string& path);

// Writes to a temporary sibling and renames onto the final path, so readers
// never observe a partial file.
void atomic_write(const std::string& path, std::string_view content);
// For writers that stream to disk themselves: produce a temp path next to
// the target, then commit it with a rename.
std::string temp_sibling(const std::string& path);
void commit_file(const std::string& temp_path, const std::string& final_path);

void ensure_output_dir(const std::string& dir);
std::string join_path(const std::string& dir, const std::string& name);

// The machine-readable success line; everything human-oriented goes to
// stderr instead so stdout stays parseable.
void print_summary(const nlohmann::json& summary);

// Splits "key<sep>value" specs like "hi=corpus.txt"; throws UsageError when
// the separator is missing or either side is empty.
std::pair<std::string, std::string> split_spec(const std::string& spec, char sep,
                                               const std::string& flag_name);

// Byte-only tokenizer when both paths are empty; loads from disk otherwise.
// Giving only one of the two paths is a usage error.
bpe::Tokenizer load_tokenizer(const std::string& vocab_path, const std::string& merges_path);

void register_vocab_commands(CLI::App& app);
void register_analysis_commands(CLI::App& app);
void register_data_commands(CLI::App& app);

}  // namespace mtkit::cli
