#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mtkit::stream_io {

// Pre-tokenized shard file, little-endian throughout:
//   magic "MTSH" | u32 version (1) | u32 id width in bytes (4)
//   then per document: u32 token count | that many u32 ids.
void write_token_shard(const std::string& path,
                       std::span<const std::vector<std::uint32_t>> documents);
std::vector<std::vector<std::uint32_t>> read_token_shard(const std::string& path);

// Packed fixed-length sequence file, little-endian throughout:
//   magic "MTPK" | u32 version (1) | u32 seq_len | u32 id width (4)
//   | u64 sequence count | seq_len * count u32 ids.
// The count is patched when the writer closes.
class PackedFileWriter {
 public:
  PackedFileWriter(const std::string& path, std::uint32_t seq_len);
  ~PackedFileWriter();

  PackedFileWriter(const PackedFileWriter&) = delete;
  PackedFileWriter& operator=(const PackedFileWriter&) = delete;

  void write(std::span<const std::uint32_t> sequence);  // size must equal seq_len
  void close();

  std::uint64_t sequences_written() const { return count_; }

 private:
  struct Impl;
  Impl* impl_;
  std::uint32_t seq_len_;
  std::uint64_t count_ = 0;
};

struct PackedFile {
  std::uint32_t seq_len = 0;
  std::vector<std::vector<std::uint32_t>> sequences;
};

PackedFile read_packed(const std::string& path);

}  // namespace mtkit::stream_io
