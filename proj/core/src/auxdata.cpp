#include "xlgen/auxdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "xlgen/error.hpp"
#include "xlgen/text.hpp"

namespace xlgen {

void AuxConfig::validate() const {
  if (min_passage < 1 || max_passage < min_passage) {
    throw std::invalid_argument("aux: passage length range must satisfy 1 <= min <= max");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("aux: fraction must lie in (0, 1]");
  }
}

PassageWindow sample_window(const SentenceCorpus& corpus, std::size_t min_len,
                            std::size_t max_len, Rng& rng) {
  if (min_len < 1 || max_len < min_len) {
    throw std::invalid_argument("sample_passage: bad length range");
  }
  if (corpus.size() < max_len) {
    throw DataError("corpus '" + corpus.source_id() + "' has " + std::to_string(corpus.size()) +
                    " sentences; passages need up to " + std::to_string(max_len));
  }
  PassageWindow w;
  w.length = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
  w.start = rng.uniform_index(corpus.size() - w.length + 1);
  return w;
}

std::vector<std::string> sample_passage(const SentenceCorpus& corpus, std::size_t min_len,
                                        std::size_t max_len, Rng& rng) {
  const auto w = sample_window(corpus, min_len, max_len, rng);
  const auto& s = corpus.sentences();
  return {s.begin() + static_cast<std::ptrdiff_t>(w.start),
          s.begin() + static_cast<std::ptrdiff_t>(w.start + w.length)};
}

std::size_t summary_size(std::size_t k, double fraction) {
  const auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(k) + 0.5));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(k, 1));
}

std::vector<std::size_t> select_summary_indices(std::size_t k, double fraction, Rng& rng) {
  if (k == 0) throw std::invalid_argument("select_rand_summary: empty passage");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("select_rand_summary: fraction must lie in (0, 1]");
  }
  const std::size_t m = summary_size(k, fraction);
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first m slots become a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.uniform_index(k - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::string> select_rand_summary(const std::vector<std::string>& passage,
                                             double fraction, Rng& rng) {
  std::vector<std::string> out;
  for (std::size_t i : select_summary_indices(passage.size(), fraction, rng)) {
    out.push_back(passage[i]);
  }
  return out;
}

namespace {

void generate_rounds(const std::vector<SentenceCorpus>& corpora, std::size_t rounds,
                     const AuxConfig& cfg, Rng& rng, std::vector<AuxExample>& out) {
  out.reserve(rounds * corpora.size());
  for (std::size_t r = 0; r < rounds; ++r) {
    for (const auto& corpus : corpora) {
      auto passage = sample_passage(corpus, cfg.min_passage, cfg.max_passage, rng);
      auto summary = select_rand_summary(passage, cfg.fraction, rng);
      out.push_back(AuxExample{std::move(passage), std::move(summary), corpus.lang()});
    }
  }
}

}  // namespace

std::vector<AuxExample> generate_aux_dataset(const std::vector<SentenceCorpus>& corpora,
                                             std::size_t n_per_language, const AuxConfig& cfg,
                                             std::uint64_t seed, std::size_t partitions,
                                             bool parallel) {
  cfg.validate();
  if (corpora.empty()) throw std::invalid_argument("generate_aux_dataset: no corpora");
  if (n_per_language == 0) throw std::invalid_argument("generate_aux_dataset: n == 0");
  for (const auto& c : corpora) {
    if (c.size() < cfg.max_passage) {
      throw DataError("corpus '" + c.source_id() + "' has " + std::to_string(c.size()) +
                      " sentences; passages need up to " + std::to_string(cfg.max_passage));
    }
  }
  partitions = std::clamp<std::size_t>(partitions, 1, n_per_language);

  std::vector<std::vector<AuxExample>> chunks(partitions);
  std::vector<std::size_t> rounds(partitions, n_per_language / partitions);
  for (std::size_t w = 0; w < n_per_language % partitions; ++w) ++rounds[w];

  auto run_chunk = [&](std::size_t w) {
    Rng rng(Rng::derive(seed, w));
    generate_rounds(corpora, rounds[w], cfg, rng, chunks[w]);
  };
  if (parallel && partitions > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < partitions; ++w) workers.emplace_back(run_chunk, w);
  } else {
    for (std::size_t w = 0; w < partitions; ++w) run_chunk(w);
  }

  std::vector<AuxExample> out;
  out.reserve(n_per_language * corpora.size());
  for (auto& chunk : chunks) {
    std::move(chunk.begin(), chunk.end(), std::back_inserter(out));
  }
  return out;
}

TextPair to_text_pair(const AuxExample& example) {
  return TextPair{text::join(example.passage, " "), text::join(example.rand_summary, " "),
                  example.lang.code(), example.lang.code()};
}

void NoiseConfig::validate() const {
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
    throw std::invalid_argument("noise: mask_ratio must lie in (0, 1)");
  }
  if (!(span_length_mean >= 1.0)) throw std::invalid_argument("noise: span_length_mean < 1");
  if (mask_token.empty()) throw std::invalid_argument("noise: empty mask token");
}

Corruption corrupt(const std::vector<std::string>& sentences, const NoiseConfig& cfg, Rng& rng) {
  cfg.validate();
  Corruption out;
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(sentences.size());
  for (const auto& s : sentences) {
    tokenized.push_back(text::split_whitespace(s));
    out.original.insert(out.original.end(), tokenized.back().begin(), tokenized.back().end());
  }
  if (out.original.empty()) throw std::invalid_argument("corrupt: input has no tokens");

  out.sentence_order.resize(sentences.size());
  std::iota(out.sentence_order.begin(), out.sentence_order.end(), 0);
  if (cfg.permute_sentences) rng.shuffle(out.sentence_order);

  std::vector<std::string> ordered;
  ordered.reserve(out.original.size());
  for (std::size_t s : out.sentence_order) {
    ordered.insert(ordered.end(), tokenized[s].begin(), tokenized[s].end());
  }

  const std::size_t n = ordered.size();
  const auto budget = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::floor(cfg.mask_ratio * static_cast<double>(n) + 0.5)));
  std::vector<char> masked(n, 0);
  std::vector<std::size_t> unmasked(n);
  std::iota(unmasked.begin(), unmasked.end(), 0);
  std::size_t count = 0;
  while (count < budget) {
    const auto span = static_cast<std::size_t>(1 + rng.poisson(cfg.span_length_mean - 1.0));
    std::size_t pos = unmasked[rng.uniform_index(unmasked.size())];
    for (std::size_t covered = 0; covered < span && pos < n && count < budget; ++covered, ++pos) {
      if (!masked[pos]) {
        masked[pos] = 1;
        ++count;
      }
    }
    std::erase_if(unmasked, [&](std::size_t i) { return masked[i] != 0; });
  }
  out.masked_tokens = count;

  out.corrupted.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!masked[i]) {
      out.corrupted.push_back(ordered[i]);
    } else if (i == 0 || !masked[i - 1]) {
      out.corrupted.push_back(cfg.mask_token);
    }
  }
  return out;
}

std::vector<Corruption> build_madpd_pairs(
    const std::vector<std::pair<std::string, std::string>>& parallel, const NoiseConfig& cfg,
    Rng& rng) {
  std::vector<Corruption> out;
  out.reserve(parallel.size());
  for (std::size_t i = 0; i < parallel.size(); ++i) {
    const auto& [a, b] = parallel[i];
    if (text::trim(a).empty() || text::trim(b).empty()) {
      throw std::invalid_argument("build_madpd_pairs: pair " + std::to_string(i) +
                                  " has an empty side");
    }
    out.push_back(corrupt({a, b}, cfg, rng));
  }
  return out;
}

std::vector<Corruption> build_madpd_pairs(const std::vector<std::string>& lang_a,
                                          const std::vector<std::string>& lang_b,
                                          const NoiseConfig& cfg, Rng& rng) {
  if (lang_a.size() != lang_b.size()) {
    throw std::invalid_argument("build_madpd_pairs: misaligned inputs (" +
                                std::to_string(lang_a.size()) + " vs " +
                                std::to_string(lang_b.size()) + " sentences)");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(lang_a.size());
  for (std::size_t i = 0; i < lang_a.size(); ++i) pairs.emplace_back(lang_a[i], lang_b[i]);
  return build_madpd_pairs(pairs, cfg, rng);
}

std::vector<TextPair> build_madmo_dataset(const std::vector<SentenceCorpus>& corpora,
                                          std::size_t n_per_language, const AuxConfig& cfg,
                                          const NoiseConfig& noise, std::uint64_t seed) {
  cfg.validate();
  noise.validate();
  Rng rng(seed);
  std::vector<TextPair> out;
  out.reserve(n_per_language * corpora.size());
  for (std::size_t r = 0; r < n_per_language; ++r) {
    for (const auto& corpus : corpora) {
      const auto passage = sample_passage(corpus, cfg.min_passage, cfg.max_passage, rng);
      const auto c = corrupt(passage, noise, rng);
      out.push_back(TextPair{text::join(c.corrupted, " "), text::join(c.original, " "),
                             corpus.lang().code(), corpus.lang().code()});
    }
  }
  return out;
}

}  // namespace xlgen
