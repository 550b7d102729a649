#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xlgen::text {

// Decodes one UTF-8 code point starting at `pos`, advancing `pos`.
// Malformed bytes decode as U+FFFD and advance by one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos);

bool is_space(char32_t cp);

// Unicode punctuation classes relevant to the supported scripts.
bool is_punctuation(char32_t cp);

bool is_valid_utf8(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on runs of whitespace; never yields empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

// Collapses whitespace runs to a single ASCII space and trims the ends.
std::string normalize_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// All non-whitespace code points of `s`, concatenated.
std::string strip_whitespace(std::string_view s);

}  // namespace xlgen::text
