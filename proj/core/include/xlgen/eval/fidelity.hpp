#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xlgen/eval/tokenizer.hpp"

namespace xlgen::eval {

/// Maps an output token to the language it belongs to, if any.
class LanguageAttributor {
 public:
  virtual ~LanguageAttributor() = default;
  virtual std::optional<std::string> language_of(const std::string& token) const = 0;
};

/// Disjoint per-language token sets (synthetic setting). Throws
/// std::invalid_argument if a token is listed under two languages.
class VocabularyAttributor final : public LanguageAttributor {
 public:
  explicit VocabularyAttributor(const std::map<std::string, std::set<std::string>>& vocabularies);
  std::optional<std::string> language_of(const std::string& token) const override;

 private:
  std::map<std::string, std::string> owner_;
};

/// Code-point ranges per language (natural setting). A token belongs to the
/// language owning the majority of its classified code points.
class ScriptAttributor final : public LanguageAttributor {
 public:
  using Range = std::pair<char32_t, char32_t>;  // inclusive
  explicit ScriptAttributor(std::map<std::string, std::vector<Range>> ranges);
  std::optional<std::string> language_of(const std::string& token) const override;

 private:
  std::map<std::string, std::vector<Range>> ranges_;
};

struct FidelityCounts {
  std::size_t target = 0;      // tokens attributed to the target language
  std::size_t attributed = 0;  // tokens attributed to any language
  std::size_t total = 0;

  /// target / attributed, 0 when nothing is attributed.
  double fraction() const;
};

/// Pooled over all outputs; tokens no attributor claims (punctuation,
/// unknown words) are left out of the ratio.
FidelityCounts fidelity_counts(const std::vector<std::string>& outputs, const std::string& target_lang,
                               const LanguageAttributor& attributor, const EvalTokenizer& tokenizer);

double language_fidelity(const std::vector<std::string>& outputs, const std::string& target_lang,
                         const LanguageAttributor& attributor, const EvalTokenizer& tokenizer);

}  // namespace xlgen::eval
