#include "xlgen/eval/tokenizer.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

#include "xlgen/text.hpp"

namespace xlgen::eval {

std::vector<std::string> DefaultTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = text::next_code_point(text, pos);
    const auto bytes = text.substr(start, pos - start);
    if (text::is_space(cp)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else if (text::is_punctuation(cp)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      out.emplace_back(bytes);
    } else {
      current.append(bytes);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
  return text::split_whitespace(text);
}

namespace {

std::mutex registry_mutex;

std::map<std::string, TokenizerFactory>& registry() {
  static std::map<std::string, TokenizerFactory> r;
  return r;
}

}  // namespace

std::shared_ptr<const EvalTokenizer> tokenizer_for(const LanguageTag& lang) {
  {
    std::lock_guard lock(registry_mutex);
    auto it = registry().find(lang.code());
    if (it != registry().end()) return it->second();
  }
  return std::make_shared<DefaultTokenizer>();
}

void register_tokenizer(const std::string& lang_code, TokenizerFactory factory) {
  std::lock_guard lock(registry_mutex);
  registry()[lang_code] = std::move(factory);
}

std::shared_ptr<const EvalTokenizer> tokenizer_by_id(std::string_view id) {
  if (id == "default-unicode-v1" || id == "default") return std::make_shared<DefaultTokenizer>();
  if (id == "whitespace") return std::make_shared<WhitespaceTokenizer>();
  throw std::invalid_argument("unknown tokenizer id '" + std::string(id) + "'");
}

}  // namespace xlgen::eval
