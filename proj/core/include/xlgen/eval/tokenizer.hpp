#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "xlgen/language.hpp"

namespace xlgen::eval {

/// Language-specific evaluation tokenizer. Implementations must be
/// deterministic and never emit empty tokens.
class EvalTokenizer {
 public:
  virtual ~EvalTokenizer() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

/// Splits on unicode whitespace; every punctuation code point becomes its
/// own token. Case is preserved.
class DefaultTokenizer final : public EvalTokenizer {
 public:
  std::string id() const override { return "default-unicode-v1"; }
  std::vector<std::string> tokenize(std::string_view text) const override;
};

/// Whitespace-only split, for pre-tokenized text.
class WhitespaceTokenizer final : public EvalTokenizer {
 public:
  std::string id() const override { return "whitespace"; }
  std::vector<std::string> tokenize(std::string_view text) const override;
};

using TokenizerFactory = std::function<std::shared_ptr<const EvalTokenizer>()>;

/// Tokenizer registered for a language, the default otherwise.
std::shared_ptr<const EvalTokenizer> tokenizer_for(const LanguageTag& lang);
void register_tokenizer(const std::string& lang_code, TokenizerFactory factory);

/// Looks a tokenizer up by id ("default-unicode-v1", "whitespace").
/// Throws std::invalid_argument for an unknown id.
std::shared_ptr<const EvalTokenizer> tokenizer_by_id(std::string_view id);

}  // namespace xlgen::eval
