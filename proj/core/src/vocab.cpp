#include "xlgen/vocab.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "xlgen/text.hpp"

namespace xlgen {

Vocabulary::Vocabulary() {
  push(std::string(tokens::kPad));
  push(std::string(tokens::kEos));
  push(std::string(tokens::kUnk));
  push(std::string(tokens::kMask));
}

TokenId Vocabulary::push(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

Vocabulary Vocabulary::build(const std::vector<LanguageTag>& languages,
                             const std::vector<std::string>& texts) {
  Vocabulary v;
  for (const auto& lang : languages) v.add_language(lang);
  std::set<std::string> words;
  for (const auto& t : texts) {
    for (auto& w : text::split_whitespace(t)) {
      if (!is_reserved_token(w)) words.insert(std::move(w));
    }
  }
  for (const auto& w : words) v.add_word(w);
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  if (tokens.size() < v.tokens_.size() ||
      !std::equal(v.tokens_.begin(), v.tokens_.end(), tokens.begin())) {
    throw std::invalid_argument("vocabulary: token list lacks the special-token prefix");
  }
  std::size_t i = v.tokens_.size();
  while (i + 1 < tokens.size() && tokens[i].starts_with("<f") &&
         is_reserved_token(tokens[i])) {
    const std::string code = tokens[i].substr(2, tokens[i].size() - 3);
    if (tokens[i + 1] != "<2" + code + ">") break;
    v.add_language(LanguageTag(code));
    i += 2;
  }
  for (; i < tokens.size(); ++i) {
    if (v.find(tokens[i])) throw std::invalid_argument("vocabulary: duplicate token " + tokens[i]);
    v.push(tokens[i]);
  }
  return v;
}

void Vocabulary::add_language(const LanguageTag& lang) {
  if (has_language(lang)) return;
  if (tokens_.size() != 4 + 2 * languages_.size()) {
    throw std::logic_error("vocabulary: languages must be registered before words");
  }
  push(lang.from_token());
  push(lang.to_token());
  languages_.push_back(lang);
}

TokenId Vocabulary::add_word(std::string_view word) {
  if (auto id = find(word)) return *id;
  if (word.empty() || is_reserved_token(word)) {
    throw std::invalid_argument("vocabulary: cannot add reserved or empty word");
  }
  return push(std::string(word));
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::has_language(const LanguageTag& lang) const {
  return std::find(languages_.begin(), languages_.end(), lang) != languages_.end();
}

TokenId Vocabulary::from_tag(const LanguageTag& lang) const {
  auto id = find(lang.from_token());
  if (!id) throw std::invalid_argument("unknown language code '" + lang.code() + "'");
  return *id;
}

TokenId Vocabulary::to_tag(const LanguageTag& lang) const {
  auto id = find(lang.to_token());
  if (!id) throw std::invalid_argument("unknown language code '" + lang.code() + "'");
  return *id;
}

bool Vocabulary::is_tag(TokenId id) const {
  return id > kMask && static_cast<std::size_t>(id) < 4 + 2 * languages_.size();
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& w : text::split_whitespace(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == kEos) break;
    if (id == kPad || is_tag(id)) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

}  // namespace xlgen
