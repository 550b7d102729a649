#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xlgen/language.hpp"

namespace xlgen {

using TokenId = std::int32_t;

/// Word-level vocabulary: special tokens, then a <f..>/<2..> pair per
/// registered language, then words in lexicographic order.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kMask = 3;

  Vocabulary();

  /// Languages are registered in the given order; words are the sorted
  /// union of whitespace tokens found in `texts`.
  static Vocabulary build(const std::vector<LanguageTag>& languages,
                          const std::vector<std::string>& texts);

  /// Restores a vocabulary from its token list (as written by tokens()).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  void add_language(const LanguageTag& lang);
  TokenId add_word(std::string_view word);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  std::optional<TokenId> find(std::string_view token) const;
  TokenId id(std::string_view token) const { return find(token).value_or(kUnk); }

  /// Throws std::invalid_argument for an unregistered language.
  TokenId from_tag(const LanguageTag& lang) const;
  TokenId to_tag(const LanguageTag& lang) const;

  bool has_language(const LanguageTag& lang) const;
  const std::vector<LanguageTag>& languages() const { return languages_; }

  bool is_special(TokenId id) const { return id >= 0 && id <= kMask; }
  bool is_tag(TokenId id) const;

  /// Whitespace tokenization; unknown words map to <unk>.
  std::vector<TokenId> encode(std::string_view text) const;

  /// Joins tokens with spaces, stopping at </s> and skipping pad/tag tokens.
  std::string decode(std::span<const TokenId> ids) const;

 private:
  TokenId push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<LanguageTag> languages_;
};

}  // namespace xlgen
