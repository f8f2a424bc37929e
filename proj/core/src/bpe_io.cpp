#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mtkit/bpe.hpp"
#include "mtkit/error.hpp"
#include "mtkit/text.hpp"

namespace mtkit::bpe {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string decode_token(std::string_view printable, const std::string& where) {
  const auto bytes = text::printable_to_bytes(printable);
  if (!bytes) {
    throw Error(where + ": token \"" + std::string(printable) +
                "\" is not in the byte-printable alphabet");
  }
  return *bytes;
}

}  // namespace

std::string Tokenizer::vocab_json() const {
  nlohmann::json obj = nlohmann::json::object();
  for (std::size_t id = 0; id < id_to_token_.size(); ++id) {
    obj[text::bytes_to_printable(id_to_token_[id])] = id;
  }
  return obj.dump();
}

std::string Tokenizer::merges_text() const {
  std::string out = "#version 1\n";
  for (const MergeRule& m : merges_) {
    out += text::bytes_to_printable(m.left);
    out += ' ';
    out += text::bytes_to_printable(m.right);
    out += '\n';
  }
  return out;
}

void Tokenizer::save(const std::string& vocab_path, const std::string& merges_path) const {
  std::ofstream v(vocab_path, std::ios::binary);
  if (!v || !(v << vocab_json())) {
    throw Error("cannot write " + vocab_path);
  }
  std::ofstream m(merges_path, std::ios::binary);
  if (!m || !(m << merges_text())) {
    throw Error("cannot write " + merges_path);
  }
}

Tokenizer Tokenizer::from_serialized(std::string_view vocab_json, std::string_view merges_text,
                                     const std::string& vocab_name,
                                     const std::string& merges_name) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(vocab_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(vocab_name + ": " + e.what());
  }
  if (!obj.is_object()) {
    throw Error(vocab_name + ": expected a JSON object mapping token -> id");
  }
  std::vector<std::string> tokens(obj.size());
  std::vector<bool> seen(obj.size(), false);
  for (const auto& [key, value] : obj.items()) {
    if (!value.is_number_unsigned()) {
      throw Error(vocab_name + ": id for token \"" + key + "\" is not a non-negative integer");
    }
    const std::uint64_t id = value.get<std::uint64_t>();
    if (id >= tokens.size()) {
      throw Error(vocab_name + ": id " + std::to_string(id) + " breaks the dense 0.." +
                  std::to_string(tokens.size() - 1) + " range");
    }
    if (seen[id]) {
      throw Error(vocab_name + ": duplicate id " + std::to_string(id));
    }
    seen[id] = true;
    tokens[id] = decode_token(key, vocab_name);
  }

  std::vector<MergeRule> merges;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < merges_text.size()) {
    ++line_no;
    std::size_t eol = merges_text.find('\n', pos);
    if (eol == std::string_view::npos) {
      eol = merges_text.size();
    }
    const std::string_view line = merges_text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const std::size_t space = line.find(' ');
    if (space == std::string_view::npos || space == 0 || space + 1 >= line.size() ||
        line.find(' ', space + 1) != std::string_view::npos) {
      throw Error(merges_name + ":" + std::to_string(line_no) + ": expected \"left right\"");
    }
    const std::string where = merges_name + ":" + std::to_string(line_no);
    merges.push_back(MergeRule{decode_token(line.substr(0, space), where),
                               decode_token(line.substr(space + 1), where)});
  }

  return from_parts(std::move(tokens), std::move(merges));
}

Tokenizer Tokenizer::load(const std::string& vocab_path, const std::string& merges_path) {
  return from_serialized(read_file(vocab_path), read_file(merges_path), vocab_path, merges_path);
}

}  // namespace mtkit::bpe
