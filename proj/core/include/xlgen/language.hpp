#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace xlgen {

namespace tokens {
inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kMask = "<mask>";
}  // namespace tokens

// A language identifier plus its two reserved conditioning tokens:
// "<f{code}>" marks the source language and "<2{code}>" the target.
class LanguageTag {
 public:
  static constexpr std::size_t kMaxCodeLength = 8;

  // Throws std::invalid_argument unless `code` is 1..8 chars of [a-z0-9].
  explicit LanguageTag(std::string code);

  const std::string& code() const { return code_; }
  std::string from_token() const { return "<f" + code_ + ">"; }
  std::string to_token() const { return "<2" + code_ + ">"; }

  auto operator<=>(const LanguageTag&) const = default;

 private:
  std::string code_;
};

bool is_valid_language_code(std::string_view code);

// Special tokens and any language-tag-shaped token.
bool is_reserved_token(std::string_view token);

// True if any substring of `text` is a reserved token.
bool contains_reserved_token(std::string_view text);

}  // namespace xlgen
