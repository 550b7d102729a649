#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xlgen/language.hpp"

namespace xlgen {

/// Ordered monolingual sentences in one language. Immutable once built, so
/// a corpus can be shared between threads freely.
class SentenceCorpus {
 public:
  /// Throws DataError if any sentence is blank after trimming.
  SentenceCorpus(LanguageTag lang, std::vector<std::string> sentences,
                 std::string source_id);

  const LanguageTag& lang() const { return lang_; }
  const std::vector<std::string>& sentences() const { return sentences_; }
  const std::string& source_id() const { return source_id_; }
  std::size_t size() const { return sentences_.size(); }
  const std::string& operator[](std::size_t i) const { return sentences_[i]; }

 private:
  LanguageTag lang_;
  std::vector<std::string> sentences_;
  std::string source_id_;
};

/// Splits running text into sentences. Implementations must be pure.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<std::string> segment(std::string_view text) const = 0;
};

/// Splits after terminal punctuation (. ! ? danda) followed by whitespace or
/// end of input. The ideographic full stop splits unconditionally because
/// Japanese text does not put spaces between sentences.
class PunctuationSegmenter final : public Segmenter {
 public:
  std::vector<std::string> segment(std::string_view text) const override;
};

/// Returns the segmenter registered for `lang`, or the punctuation default.
const Segmenter& segmenter_for(const LanguageTag& lang);

/// Overrides segmentation for one language code (process-wide).
void register_segmenter(const std::string& code, std::shared_ptr<const Segmenter> segmenter);

/// Sentence-splits `text`; whitespace inside each sentence is normalized to
/// single spaces. Throws DataError if the text holds a reserved tag token.
std::vector<std::string> segment_sentences(std::string_view text, const LanguageTag& lang);

/// Reads a UTF-8 file with one sentence or paragraph per line.
SentenceCorpus load_corpus(const std::filesystem::path& path, const LanguageTag& lang);

/// Writes one sentence per line.
void save_corpus(const SentenceCorpus& corpus, const std::filesystem::path& path);

struct SyntheticCorpusSpec {
  std::size_t vocab_size = 50;
  std::size_t n_sentences = 100;
  std::pair<std::size_t, std::size_t> sentence_len_range{4, 9};
  std::uint64_t seed = 0;
};

/// Artificial language: words "<code>_<i>" for i < vocab_size, uniform
/// sentence lengths, and a '.' glued to the last word of every sentence.
/// Distinct languages therefore never share a token.
SentenceCorpus generate_synthetic_corpus(const LanguageTag& lang, const SyntheticCorpusSpec& spec);

/// The whitespace tokens a synthetic language can produce.
std::vector<std::string> synthetic_vocabulary(const LanguageTag& lang, std::size_t vocab_size);

}  // namespace xlgen
