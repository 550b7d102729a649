#include "xlgen/language.hpp"

#include <algorithm>
#include <stdexcept>

namespace xlgen {

bool is_valid_language_code(std::string_view code) {
  return !code.empty() && code.size() <= LanguageTag::kMaxCodeLength &&
         std::all_of(code.begin(), code.end(), [](char c) {
           return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
         });
}

LanguageTag::LanguageTag(std::string code) : code_(std::move(code)) {
  if (!is_valid_language_code(code_)) {
    throw std::invalid_argument("invalid language code '" + code_ +
                                "' (expected 1-8 chars of [a-z0-9])");
  }
}

bool is_reserved_token(std::string_view token) {
  if (token == tokens::kPad || token == tokens::kEos || token == tokens::kUnk ||
      token == tokens::kMask) {
    return true;
  }
  if (token.size() < 4 || token.front() != '<' || token.back() != '>') return false;
  if (token[1] != 'f' && token[1] != '2') return false;
  return is_valid_language_code(token.substr(2, token.size() - 3));
}

bool contains_reserved_token(std::string_view text) {
  for (std::size_t open = text.find('<'); open != std::string_view::npos;
       open = text.find('<', open + 1)) {
    const std::size_t close = text.find('>', open);
    if (close == std::string_view::npos) return false;
    // Only the innermost '<' before `close` can start a token ending there.
    const std::size_t inner = text.rfind('<', close);
    if (is_reserved_token(text.substr(inner, close - inner + 1))) return true;
    open = inner;
  }
  return false;
}

}  // namespace xlgen
