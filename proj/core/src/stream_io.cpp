#include "mtkit/stream_io.hpp"

#include <cstring>
#include <fstream>

#include "mtkit/error.hpp"

namespace mtkit::stream_io {

namespace {

constexpr char kShardMagic[4] = {'M', 'T', 'S', 'H'};
constexpr char kPackedMagic[4] = {'M', 'T', 'P', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kIdWidth = 4;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFull));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

class Reader {
 public:
  Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) {
      throw Error("cannot open " + path);
    }
  }

  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    return lo | (static_cast<std::uint64_t>(u32()) << 32);
  }

  void expect_magic(const char magic[4], const char* kind) {
    char got[4];
    read(got, 4);
    if (std::memcmp(got, magic, 4) != 0) {
      throw Error(path_ + ": not a " + kind + " file (bad magic)");
    }
  }

  void ids(std::vector<std::uint32_t>& out, std::size_t n) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = u32();
    }
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  void read(void* dst, std::size_t n) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
      throw Error(path_ + ": truncated file");
    }
  }

  std::string path_;
  std::ifstream in_;
};

void check_header(Reader& r, const std::string& path) {
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(path + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t width = r.u32();
  if (width != kIdWidth) {
    throw Error(path + ": unsupported id width " + std::to_string(width));
  }
}

}  // namespace

void write_token_shard(const std::string& path,
                       std::span<const std::vector<std::uint32_t>> documents) {
  std::string out;
  out.append(kShardMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, kIdWidth);
  for (const auto& doc : documents) {
    put_u32(out, static_cast<std::uint32_t>(doc.size()));
    for (const std::uint32_t id : doc) {
      put_u32(out, id);
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw Error("cannot write " + path);
  }
}

std::vector<std::vector<std::uint32_t>> read_token_shard(const std::string& path) {
  Reader r(path);
  r.expect_magic(kShardMagic, "token shard");
  check_header(r, path);
  std::vector<std::vector<std::uint32_t>> documents;
  while (!r.at_eof()) {
    const std::uint32_t n = r.u32();
    documents.emplace_back();
    r.ids(documents.back(), n);
  }
  return documents;
}

struct PackedFileWriter::Impl {
  std::string path;
  std::ofstream out;
};

PackedFileWriter::PackedFileWriter(const std::string& path, std::uint32_t seq_len)
    : impl_(new Impl{path, std::ofstream(path, std::ios::binary)}), seq_len_(seq_len) {
  if (!impl_->out) {
    delete impl_;
    impl_ = nullptr;
    throw Error("cannot write " + path);
  }
  std::string header;
  header.append(kPackedMagic, 4);
  put_u32(header, kVersion);
  put_u32(header, seq_len);
  put_u32(header, kIdWidth);
  put_u64(header, 0);  // sequence count, patched on close
  impl_->out.write(header.data(), static_cast<std::streamsize>(header.size()));
}

PackedFileWriter::~PackedFileWriter() {
  if (impl_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void PackedFileWriter::write(std::span<const std::uint32_t> sequence) {
  if (!impl_) {
    throw Error("packed writer already closed");
  }
  if (sequence.size() != seq_len_) {
    throw Error("packed sequence has length " + std::to_string(sequence.size()) + ", expected " +
                std::to_string(seq_len_));
  }
  std::string body;
  body.reserve(sequence.size() * 4);
  for (const std::uint32_t id : sequence) {
    put_u32(body, id);
  }
  impl_->out.write(body.data(), static_cast<std::streamsize>(body.size()));
  ++count_;
}

void PackedFileWriter::close() {
  if (!impl_) {
    return;
  }
  Impl* impl = impl_;
  impl_ = nullptr;
  impl->out.seekp(16);  // offset of the u64 sequence count
  std::string counter;
  put_u64(counter, count_);
  impl->out.write(counter.data(), static_cast<std::streamsize>(counter.size()));
  const bool ok = static_cast<bool>(impl->out.flush());
  const std::string path = impl->path;
  delete impl;
  if (!ok) {
    throw Error("cannot finalize " + path);
  }
}

PackedFile read_packed(const std::string& path) {
  Reader r(path);
  r.expect_magic(kPackedMagic, "packed sequence");
  PackedFile file;
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(path + ": unsupported version " + std::to_string(version));
  }
  file.seq_len = r.u32();
  const std::uint32_t width = r.u32();
  if (width != kIdWidth) {
    throw Error(path + ": unsupported id width " + std::to_string(width));
  }
  const std::uint64_t count = r.u64();
  file.sequences.resize(count);
  for (auto& seq : file.sequences) {
    r.ids(seq, file.seq_len);
  }
  if (!r.at_eof()) {
    throw Error(path + ": trailing bytes after " + std::to_string(count) + " sequences");
  }
  return file;
}

}  // namespace mtkit::stream_io
