#include "mtkit/text.hpp"

#include <array>
#include <boost/locale.hpp>
#include <mutex>

namespace mtkit::text {

bool is_unicode_whitespace(char32_t cp) {
  switch (cp) {
    case 0x0009:
    case 0x000A:
    case 0x000B:
    case 0x000C:
    case 0x000D:
    case 0x0020:
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min_cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
    min_cp = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
    min_cp = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
    min_cp = 0x10000;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char b = byte(i + k);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  // Overlong forms, surrogates, and out-of-range values are malformed.
  if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return 0xFFFD;
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<Segment> split_segments(std::string_view textdata) {
  std::vector<Segment> segments;
  std::size_t i = 0;
  std::size_t run_start = 0;
  bool run_ws = false;
  bool in_run = false;
  while (i < textdata.size()) {
    const std::size_t cp_start = i;
    const char32_t cp = decode_utf8(textdata, i);
    const bool ws = is_unicode_whitespace(cp);
    if (!in_run) {
      run_start = cp_start;
      run_ws = ws;
      in_run = true;
    } else if (ws != run_ws) {
      segments.push_back({textdata.substr(run_start, cp_start - run_start), run_ws});
      run_start = cp_start;
      run_ws = ws;
    }
  }
  if (in_run) {
    segments.push_back({textdata.substr(run_start), run_ws});
  }
  return segments;
}

std::uint64_t count_words(std::string_view textdata) {
  std::uint64_t words = 0;
  std::size_t i = 0;
  bool in_word = false;
  while (i < textdata.size()) {
    const bool ws = is_unicode_whitespace(decode_utf8(textdata, i));
    if (!ws && !in_word) {
      ++words;
    }
    in_word = !ws;
  }
  return words;
}

namespace {

struct ByteCharTable {
  std::array<char32_t, 256> byte_to_cp{};
  // Dense inverse for the 0x21..0x143 range actually used by the mapping.
  std::array<int, 0x144> cp_to_byte{};

  ByteCharTable() {
    cp_to_byte.fill(-1);
    const auto keeps = [](int b) {
      return (b >= 0x21 && b <= 0x7E) || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
    };
    char32_t next = 0x100;
    for (int b = 0; b < 256; ++b) {
      const char32_t cp = keeps(b) ? static_cast<char32_t>(b) : next++;
      byte_to_cp[static_cast<std::size_t>(b)] = cp;
      cp_to_byte[cp] = b;
    }
  }
};

const ByteCharTable& table() {
  static const ByteCharTable t;
  return t;
}

}  // namespace

std::string bytes_to_printable(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const unsigned char b : bytes) {
    append_utf8(out, table().byte_to_cp[b]);
  }
  return out;
}

std::optional<std::string> printable_to_bytes(std::string_view printable) {
  std::string out;
  out.reserve(printable.size());
  std::size_t i = 0;
  while (i < printable.size()) {
    const char32_t cp = decode_utf8(printable, i);
    if (cp >= table().cp_to_byte.size()) {
      return std::nullopt;
    }
    const int b = table().cp_to_byte[cp];
    if (b < 0) {
      return std::nullopt;
    }
    out.push_back(static_cast<char>(b));
  }
  return out;
}

std::string normalize_nfc(std::string_view textdata) {
  static std::once_flag once;
  static std::locale loc;
  std::call_once(once, [] {
    boost::locale::generator gen;
    loc = gen("en_US.UTF-8");
  });
  return boost::locale::normalize(std::string(textdata), boost::locale::norm_nfc, loc);
}

}  // namespace mtkit::text
