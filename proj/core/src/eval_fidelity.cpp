#include "xlgen/eval/fidelity.hpp"

#include <stdexcept>

#include "xlgen/text.hpp"

namespace xlgen::eval {

VocabularyAttributor::VocabularyAttributor(
    const std::map<std::string, std::set<std::string>>& vocabularies) {
  for (const auto& [lang, words] : vocabularies) {
    for (const auto& w : words) {
      auto [it, inserted] = owner_.emplace(w, lang);
      if (!inserted && it->second != lang) {
        throw std::invalid_argument("token '" + w + "' belongs to both " + it->second + " and " + lang);
      }
    }
  }
}

std::optional<std::string> VocabularyAttributor::language_of(const std::string& token) const {
  auto it = owner_.find(token);
  if (it == owner_.end()) return std::nullopt;
  return it->second;
}

ScriptAttributor::ScriptAttributor(std::map<std::string, std::vector<Range>> ranges)
    : ranges_(std::move(ranges)) {}

std::optional<std::string> ScriptAttributor::language_of(const std::string& token) const {
  std::map<std::string, std::size_t> votes;
  std::size_t pos = 0;
  while (pos < token.size()) {
    const char32_t cp = text::next_code_point(token, pos);
    for (const auto& [lang, ranges] : ranges_) {
      for (const auto& [lo, hi] : ranges) {
        if (cp >= lo && cp <= hi) {
          ++votes[lang];
          break;
        }
      }
    }
  }
  std::optional<std::string> best;
  std::size_t best_votes = 0;
  for (const auto& [lang, n] : votes) {
    if (n > best_votes) {
      best = lang;
      best_votes = n;
    }
  }
  return best;
}

double FidelityCounts::fraction() const {
  return attributed ? static_cast<double>(target) / static_cast<double>(attributed) : 0.0;
}

FidelityCounts fidelity_counts(const std::vector<std::string>& outputs, const std::string& target_lang,
                               const LanguageAttributor& attributor, const EvalTokenizer& tokenizer) {
  FidelityCounts c;
  for (const auto& line : outputs) {
    for (const auto& token : tokenizer.tokenize(line)) {
      ++c.total;
      const auto lang = attributor.language_of(token);
      if (!lang) continue;
      ++c.attributed;
      if (*lang == target_lang) ++c.target;
    }
  }
  return c;
}

double language_fidelity(const std::vector<std::string>& outputs, const std::string& target_lang,
                         const LanguageAttributor& attributor, const EvalTokenizer& tokenizer) {
  return fidelity_counts(outputs, target_lang, attributor, tokenizer).fraction();
}

}  // namespace xlgen::eval
