#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtkit::text {

// True for code points with the Unicode White_Space property.
bool is_unicode_whitespace(char32_t cp);

// Decodes the UTF-8 sequence starting at s[i] and advances i past it.
// Malformed sequences yield U+FFFD and advance by one byte, so the scan
// always terminates and every byte is consumed exactly once.
char32_t decode_utf8(std::string_view s, std::size_t& i);

void append_utf8(std::string& out, char32_t cp);

// A maximal run of whitespace or non-whitespace bytes.
struct Segment {
  std::string_view bytes;
  bool is_whitespace = false;
};

// Splits text into alternating whitespace / non-whitespace runs, classified
// by Unicode code point. Concatenating the segments reproduces the input
// byte-for-byte. Bytes of malformed UTF-8 count as non-whitespace.
std::vector<Segment> split_segments(std::string_view textdata);

// Number of maximal non-whitespace runs.
std::uint64_t count_words(std::string_view textdata);

// Bijective byte <-> printable code point mapping used by the vocab and
// merges file formats. Printable ASCII (except space) and the upper Latin-1
// printables map to themselves; the remaining 68 bytes map to U+0100..U+0143
// in byte order. Serialized token strings therefore never contain raw
// whitespace or control characters.
std::string bytes_to_printable(std::string_view bytes);

// Inverse of bytes_to_printable. Returns nullopt when the input contains a
// code point outside the mapping's image.
std::optional<std::string> printable_to_bytes(std::string_view printable);

// Canonical composition (NFC). Backed by Boost.Locale.
std::string normalize_nfc(std::string_view textdata);

}  // namespace mtkit::text
