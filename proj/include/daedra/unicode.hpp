#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace daedra::unicode {

/// Each byte is one code point in U+0000..U+00FF.
std::string latin1_to_utf8(std::string_view bytes);

/// Replaces every ill-formed UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

/// Canonical composition (NFC). Input must be well-formed UTF-8.
std::string nfc(std::string_view utf8);

bool is_whitespace(char32_t cp);
/// ASCII symbol ranges plus any code point in a Unicode P* category.
bool is_punctuation(char32_t cp);
bool is_control(char32_t cp);

/// Code points of a well-formed UTF-8 string.
std::vector<char32_t> code_points(std::string_view utf8);
std::size_t length(std::string_view utf8);
void append_utf8(std::string& out, char32_t cp);

/// Byte offsets of every code point boundary, including 0 and size().
std::vector<std::size_t> boundaries(std::string_view utf8);

std::string_view trim(std::string_view utf8);
std::vector<std::string_view> split_whitespace(std::string_view utf8);

}  // namespace daedra::unicode
