#include "common.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mtkit/error.hpp"

namespace mtkit::cli {

namespace fs = std::filesystem;

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) {
    return nlohmann::json::object();
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!parsed.is_object()) {
    throw UsageError("config file " + path + ": top-level value must be an object");
  }
  return parsed;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(line);
  }
  return lines;
}

std::string temp_sibling(const std::string& path) {
  static std::atomic<unsigned> counter{0};
  return path + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
}

void commit_file(const std::string& temp_path, const std::string& final_path) {
  std::error_code ec;
  fs::rename(temp_path, final_path, ec);
  if (ec) {
    fs::remove(temp_path);
    throw Error("cannot move " + temp_path + " to " + final_path + ": " + ec.message());
  }
}

void atomic_write(const std::string& path, std::string_view content) {
  const std::string temp = temp_sibling(path);
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot create " + temp);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(temp);
      throw Error("write failed for " + temp);
    }
  }
  commit_file(temp, path);
}

void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error("cannot create output directory " + dir + ": " + ec.message());
  }
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void print_summary(const nlohmann::json& summary) {
  std::cout << summary.dump() << "\n";
  std::cout.flush();
}

std::pair<std::string, std::string> split_spec(const std::string& spec, char sep,
                                               const std::string& flag_name) {
  const std::size_t pos = spec.find(sep);
  if (pos == std::string::npos || pos == 0 || pos + 1 == spec.size()) {
    throw UsageError(flag_name + ": expected 'key" + std::string(1, sep) + "value', got '" +
                     spec + "'");
  }
  return {spec.substr(0, pos), spec.substr(pos + 1)};
}

bpe::Tokenizer load_tokenizer(const std::string& vocab_path, const std::string& merges_path) {
  if (vocab_path.empty() != merges_path.empty()) {
    throw UsageError("--vocab and --merges must be given together");
  }
  if (vocab_path.empty()) {
    return bpe::Tokenizer();
  }
  return bpe::Tokenizer::load(vocab_path, merges_path);
}

}  // namespace mtkit::cli
