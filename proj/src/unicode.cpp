#include "daedra/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace daedra::unicode {

std::string latin1_to_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size() + bytes.size() / 8);
  for (unsigned char b : bytes) {
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
    } else {
      out.push_back(static_cast<char>(0xC0 | (b >> 6)));
      out.push_back(static_cast<char>(0x80 | (b & 0x3F)));
    }
  }
  return out;
}

std::string sanitize_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  const auto* s = reinterpret_cast<const std::uint8_t*>(bytes.data());
  const auto n = static_cast<std::int32_t>(bytes.size());
  std::int32_t i = 0;
  while (i < n) {
    const std::int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0) {
      append_utf8(out, 0xFFFD);
    } else {
      out.append(bytes.substr(start, i - start));
    }
  }
  return out;
}

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  const icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
  if (norm->isNormalized(src, status) && U_SUCCESS(status)) {
    return std::string(utf8);
  }
  status = U_ZERO_ERROR;
  const icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("NFC normalization failed");
  }
  std::string out;
  dst.toUTF8String(out);
  return out;
}

bool is_whitespace(char32_t cp) {
  if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r') return true;
  return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool is_punctuation(char32_t cp) {
  if ((cp >= 33 && cp <= 47) || (cp >= 58 && cp <= 64) ||
      (cp >= 91 && cp <= 96) || (cp >= 123 && cp <= 126)) {
    return true;
  }
  return u_ispunct(static_cast<UChar32>(cp));
}

bool is_control(char32_t cp) {
  if (cp == U'\t' || cp == U'\n' || cp == U'\r') return false;
  const auto type = u_charType(static_cast<UChar32>(cp));
  return type == U_CONTROL_CHAR || type == U_FORMAT_CHAR;
}

std::vector<char32_t> code_points(std::string_view utf8) {
  std::vector<char32_t> out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const std::uint8_t*>(utf8.data());
  const auto n = static_cast<std::int32_t>(utf8.size());
  std::int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(s, i, n, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::size_t length(std::string_view utf8) {
  std::size_t count = 0;
  for (unsigned char b : utf8) {
    if ((b & 0xC0) != 0x80) ++count;
  }
  return count;
}

void append_utf8(std::string& out, char32_t cp) {
  char buf[U8_MAX_LENGTH];
  std::int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), len, U8_MAX_LENGTH,
            static_cast<UChar32>(cp), error);
  if (error) {
    out.append("\xEF\xBF\xBD");
    return;
  }
  out.append(buf, static_cast<std::size_t>(len));
}

std::vector<std::size_t> boundaries(std::string_view utf8) {
  std::vector<std::size_t> out;
  out.reserve(utf8.size() + 1);
  for (std::size_t i = 0; i < utf8.size(); ++i) {
    if ((static_cast<unsigned char>(utf8[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  out.push_back(utf8.size());
  return out;
}

namespace {

// Decodes the code point starting at byte i, returning its byte length.
std::size_t decode_at(std::string_view s, std::size_t i, char32_t& cp) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  auto j = static_cast<std::int32_t>(i);
  UChar32 c;
  U8_NEXT(p, j, static_cast<std::int32_t>(s.size()), c);
  cp = c < 0 ? U'\uFFFD' : static_cast<char32_t>(c);
  return static_cast<std::size_t>(j) - i;
}

}  // namespace

std::string_view trim(std::string_view utf8) {
  std::size_t begin = 0;
  while (begin < utf8.size()) {
    char32_t cp;
    const std::size_t len = decode_at(utf8, begin, cp);
    if (!is_whitespace(cp)) break;
    begin += len;
  }
  std::size_t end = begin;
  std::size_t pos = begin;
  while (pos < utf8.size()) {
    char32_t cp;
    const std::size_t len = decode_at(utf8, pos, cp);
    pos += len;
    if (!is_whitespace(cp)) end = pos;
  }
  return utf8.substr(begin, end - begin);
}

std::vector<std::string_view> split_whitespace(std::string_view utf8) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  std::size_t word_start = std::string_view::npos;
  while (pos < utf8.size()) {
    char32_t cp;
    const std::size_t len = decode_at(utf8, pos, cp);
    if (is_whitespace(cp)) {
      if (word_start != std::string_view::npos) {
        words.push_back(utf8.substr(word_start, pos - word_start));
        word_start = std::string_view::npos;
      }
    } else if (word_start == std::string_view::npos) {
      word_start = pos;
    }
    pos += len;
  }
  if (word_start != std::string_view::npos) {
    words.push_back(utf8.substr(word_start));
  }
  return words;
}

}  // namespace daedra::unicode
