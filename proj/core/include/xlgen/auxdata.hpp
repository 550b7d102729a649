#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xlgen/corpus.hpp"
#include "xlgen/records.hpp"
#include "xlgen/rng.hpp"

namespace xlgen {

/// Passage/rand-summary pair for the auxiliary pre-training task.
struct AuxExample {
  std::vector<std::string> passage;
  std::vector<std::string> rand_summary;
  LanguageTag lang;
};

struct AuxConfig {
  std::size_t min_passage = 5;
  std::size_t max_passage = 25;
  double fraction = 0.2;

  void validate() const;
};

struct PassageWindow {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Draws k uniformly from [min, max], then a uniform start among the
/// corpus.size() - k + 1 valid positions. Windows of successive calls may
/// overlap. Throws DataError when the corpus is shorter than `max`.
PassageWindow sample_window(const SentenceCorpus& corpus, std::size_t min_len,
                            std::size_t max_len, Rng& rng);

std::vector<std::string> sample_passage(const SentenceCorpus& corpus, std::size_t min_len,
                                        std::size_t max_len, Rng& rng);

/// m = max(1, round_half_up(fraction * k)).
std::size_t summary_size(std::size_t k, double fraction);

/// m distinct indices drawn uniformly without replacement, ascending.
std::vector<std::size_t> select_summary_indices(std::size_t k, double fraction, Rng& rng);

/// Selected sentences in passage order. Throws std::invalid_argument for an
/// empty passage or a fraction outside (0, 1].
std::vector<std::string> select_rand_summary(const std::vector<std::string>& passage,
                                             double fraction, Rng& rng);

/// N examples per language, interleaved round-robin in corpus order.
///
/// The N rounds are cut into `partitions` contiguous chunks; chunk w draws
/// from Rng(derive(seed, w)). With `parallel` set, chunks run on separate
/// threads and the result equals the sequential run with the same partition.
std::vector<AuxExample> generate_aux_dataset(const std::vector<SentenceCorpus>& corpora,
                                             std::size_t n_per_language, const AuxConfig& cfg,
                                             std::uint64_t seed, std::size_t partitions = 1,
                                             bool parallel = false);

/// src = passage joined by single spaces, tgt = rand-summary likewise.
TextPair to_text_pair(const AuxExample& example);

struct NoiseConfig {
  double mask_ratio = 0.35;
  double span_length_mean = 3.5;
  bool permute_sentences = false;
  std::string mask_token = "<mask>";

  void validate() const;
};

struct Corruption {
  std::vector<std::string> corrupted;
  std::vector<std::string> original;
  std::size_t masked_tokens = 0;
  // Source index of each sentence in the corrupted order.
  std::vector<std::size_t> sentence_order;
};

/// Denoising input: optional sentence permutation, then span masking until
/// round(mask_ratio * n_tokens) tokens are masked. Span lengths follow
/// 1 + Poisson(span_length_mean - 1); a span starts at a uniformly chosen
/// unmasked position and runs rightwards, merging into any masked run it
/// meets. Every maximal masked run becomes one mask token. Throws
/// std::invalid_argument if the input has no tokens.
Corruption corrupt(const std::vector<std::string>& sentences, const NoiseConfig& cfg, Rng& rng);

/// Parallel-pair baseline: sentence a then sentence b, corrupted as one
/// two-sentence instance.
std::vector<Corruption> build_madpd_pairs(
    const std::vector<std::pair<std::string, std::string>>& parallel, const NoiseConfig& cfg,
    Rng& rng);

/// Aligned-list form; throws std::invalid_argument on a length mismatch.
std::vector<Corruption> build_madpd_pairs(const std::vector<std::string>& lang_a,
                                          const std::vector<std::string>& lang_b,
                                          const NoiseConfig& cfg, Rng& rng);

/// Monolingual masking-and-denoising baseline records: passages sampled as
/// for the auxiliary task, src = corrupted passage, tgt = original passage.
std::vector<TextPair> build_madmo_dataset(const std::vector<SentenceCorpus>& corpora,
                                          std::size_t n_per_language, const AuxConfig& cfg,
                                          const NoiseConfig& noise, std::uint64_t seed);

}  // namespace xlgen
