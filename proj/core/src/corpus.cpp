#include "xlgen/corpus.hpp"

#include <fstream>
#include <map>
#include <mutex>

#include "xlgen/error.hpp"
#include "xlgen/rng.hpp"
#include "xlgen/text.hpp"

namespace xlgen {

SentenceCorpus::SentenceCorpus(LanguageTag lang, std::vector<std::string> sentences,
                               std::string source_id)
    : lang_(std::move(lang)), sentences_(std::move(sentences)), source_id_(std::move(source_id)) {
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    if (text::trim(sentences_[i]).empty()) {
      throw DataError("corpus '" + source_id_ + "': sentence " + std::to_string(i) +
                      " is blank");
    }
  }
}

namespace {

bool is_terminal(char32_t cp) {
  return cp == '.' || cp == '!' || cp == '?' || cp == 0x0964 || cp == 0x3002;
}

struct SegmenterRegistry {
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<const Segmenter>> by_code;
};

SegmenterRegistry& registry() {
  static SegmenterRegistry instance;
  return instance;
}

}  // namespace

std::vector<std::string> PunctuationSegmenter::segment(std::string_view text) const {
  std::vector<std::string> out;
  auto flush = [&](std::size_t begin, std::size_t end) {
    std::string sentence = text::normalize_whitespace(text.substr(begin, end - begin));
    if (!sentence.empty()) out.push_back(std::move(sentence));
  };
  std::size_t sentence_begin = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = text::next_code_point(text, pos);
    if (!is_terminal(cp)) continue;
    bool boundary = cp == 0x3002 || pos == text.size();
    if (!boundary) {
      std::size_t peek = pos;
      boundary = text::is_space(text::next_code_point(text, peek));
    }
    if (boundary) {
      flush(sentence_begin, pos);
      sentence_begin = pos;
    }
  }
  flush(sentence_begin, text.size());
  return out;
}

const Segmenter& segmenter_for(const LanguageTag& lang) {
  static const PunctuationSegmenter fallback;
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  auto it = reg.by_code.find(lang.code());
  return it == reg.by_code.end() ? fallback : *it->second;
}

void register_segmenter(const std::string& code, std::shared_ptr<const Segmenter> segmenter) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  if (segmenter) {
    reg.by_code[code] = std::move(segmenter);
  } else {
    reg.by_code.erase(code);
  }
}

std::vector<std::string> segment_sentences(std::string_view text, const LanguageTag& lang) {
  if (contains_reserved_token(text)) {
    throw DataError("text contains a reserved tag token");
  }
  return segmenter_for(lang).segment(text);
}

SentenceCorpus load_corpus(const std::filesystem::path& path, const LanguageTag& lang) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  std::vector<std::string> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::is_valid_utf8(line)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
    }
    if (text::trim(line).empty()) continue;
    if (contains_reserved_token(line)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": reserved tag token in corpus text");
    }
    for (auto& s : segmenter_for(lang).segment(line)) sentences.push_back(std::move(s));
  }
  if (sentences.empty()) throw DataError("corpus has no usable sentences: " + path.string());
  return SentenceCorpus(lang, std::move(sentences), path.string());
}

void save_corpus(const SentenceCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path.string());
  for (const auto& s : corpus.sentences()) out << s << '\n';
}

std::vector<std::string> synthetic_vocabulary(const LanguageTag& lang, std::size_t vocab_size) {
  std::vector<std::string> words;
  words.reserve(2 * vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    words.push_back(lang.code() + "_" + std::to_string(i));
  }
  for (std::size_t i = 0; i < vocab_size; ++i) words.push_back(words[i] + ".");
  return words;
}

SentenceCorpus generate_synthetic_corpus(const LanguageTag& lang, const SyntheticCorpusSpec& spec) {
  const auto [min_len, max_len] = spec.sentence_len_range;
  if (spec.vocab_size < 10) throw std::invalid_argument("synthetic corpus: vocab_size < 10");
  if (spec.n_sentences == 0) throw std::invalid_argument("synthetic corpus: n_sentences == 0");
  if (min_len < 1 || max_len < min_len) {
    throw std::invalid_argument("synthetic corpus: bad sentence length range");
  }
  Rng rng(Rng::derive(spec.seed, stable_hash(lang.code())));
  std::vector<std::string> sentences;
  sentences.reserve(spec.n_sentences);
  for (std::size_t s = 0; s < spec.n_sentences; ++s) {
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
    std::string sentence;
    for (std::size_t w = 0; w < len; ++w) {
      if (w) sentence += ' ';
      sentence += lang.code();
      sentence += '_';
      sentence += std::to_string(rng.uniform_index(spec.vocab_size));
    }
    sentence += '.';
    sentences.push_back(std::move(sentence));
  }
  return SentenceCorpus(lang, std::move(sentences), "synthetic:" + lang.code());
}

}  // namespace xlgen
