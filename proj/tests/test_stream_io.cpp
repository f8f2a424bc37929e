#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "mtkit/error.hpp"
#include "mtkit/stream_io.hpp"
#include "test_util.hpp"

using mtkit::Error;
using namespace mtkit::stream_io;

TEST_CASE("token shards round-trip") {
  testutil::TempDir dir;
  std::mt19937_64 rng(139);
  std::uniform_int_distribution<std::size_t> len_dist(0, 300);
  std::uniform_int_distribution<std::uint32_t> id_dist(0, 60000);

  std::vector<std::vector<std::uint32_t>> docs(40);
  for (auto& d : docs) {
    d.resize(len_dist(rng));
    for (auto& id : d) {
      id = id_dist(rng);
    }
  }
  const std::string path = dir.file("shard.bin");
  write_token_shard(path, docs);
  CHECK(read_token_shard(path) == docs);

  write_token_shard(path, {});
  CHECK(read_token_shard(path).empty());
}

TEST_CASE("token shard reader rejects corrupt files") {
  testutil::TempDir dir;
  const std::string path = dir.file("shard.bin");
  std::vector<std::vector<std::uint32_t>> docs = {{1, 2, 3}};
  write_token_shard(path, docs);

  std::string raw = testutil::read_file(path);
  SUBCASE("bad magic") {
    raw[0] = 'X';
    testutil::write_file(path, raw);
    CHECK_THROWS_AS(read_token_shard(path), Error);
  }
  SUBCASE("truncated document payload") {
    testutil::write_file(path, raw.substr(0, raw.size() - 2));
    CHECK_THROWS_AS(read_token_shard(path), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_token_shard(dir.file("absent.bin")), Error);
  }
}

TEST_CASE("packed sequence files round-trip with a patched count") {
  testutil::TempDir dir;
  const std::string path = dir.file("packed.bin");
  std::vector<std::vector<std::uint32_t>> seqs = {
      {1, 2, 3, 4},
      {5, 6, 7, 8},
      {9, 10, 11, 12},
  };
  {
    PackedFileWriter writer(path, 4);
    for (const auto& s : seqs) {
      writer.write(s);
    }
    CHECK(writer.sequences_written() == 3);
    writer.close();
  }
  PackedFile file = read_packed(path);
  CHECK(file.seq_len == 4);
  CHECK(file.sequences == seqs);
}

TEST_CASE("packed writer closes cleanly on destruction") {
  testutil::TempDir dir;
  const std::string path = dir.file("packed.bin");
  {
    PackedFileWriter writer(path, 2);
    writer.write(std::vector<std::uint32_t>{7, 8});
  }
  PackedFile file = read_packed(path);
  CHECK(file.seq_len == 2);
  REQUIRE(file.sequences.size() == 1);
  CHECK(file.sequences[0] == std::vector<std::uint32_t>{7, 8});
}

TEST_CASE("packed writer rejects wrong-length sequences") {
  testutil::TempDir dir;
  PackedFileWriter writer(dir.file("packed.bin"), 4);
  CHECK_THROWS_AS(writer.write(std::vector<std::uint32_t>{1, 2}), Error);
}

TEST_CASE("packed reader rejects corrupt files") {
  testutil::TempDir dir;
  const std::string path = dir.file("packed.bin");
  {
    PackedFileWriter writer(path, 2);
    writer.write(std::vector<std::uint32_t>{1, 2});
    writer.close();
  }
  std::string raw = testutil::read_file(path);
  SUBCASE("bad magic") {
    raw[0] = 'Z';
    testutil::write_file(path, raw);
    CHECK_THROWS_AS(read_packed(path), Error);
  }
  SUBCASE("trailing garbage") {
    raw += "x";
    testutil::write_file(path, raw);
    CHECK_THROWS_AS(read_packed(path), Error);
  }
  SUBCASE("count larger than payload") {
    testutil::write_file(path, raw.substr(0, raw.size() - 4));
    CHECK_THROWS_AS(read_packed(path), Error);
  }
}
