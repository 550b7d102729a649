#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "xlgen/eval/tokenizer.hpp"
#include "xlgen/tensor.hpp"

namespace xlgen::eval {

using Tokens = std::vector<std::string>;

/// Pooled n-gram statistics for corpus BLEU.
struct BleuStats {
  std::array<std::size_t, 4> correct{};
  std::array<std::size_t, 4> total{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Tokens& hypothesis, const Tokens& reference);

/// Corpus BLEU-4 in [0, 100] from pooled statistics: geometric mean of
/// modified precisions, brevity penalty exp(1 - r/c) when c < r. A zero
/// match count at order n is replaced by 1/2^k of a count, k being the
/// number of zero orders so far.
double bleu_from_stats(const BleuStats& stats);

/// Throws std::invalid_argument on length mismatch or an empty corpus.
double bleu4(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);
double bleu4(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
             const EvalTokenizer& tokenizer);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PRF make_prf(double precision, double recall);

enum class RougeVariant { R1, R2, RL };

/// ROUGE-n from clipped n-gram overlap or ROUGE-L from the longest common
/// subsequence. Throws std::invalid_argument if either side is empty.
PRF rouge(const Tokens& hypothesis, const Tokens& reference, RougeVariant variant);
PRF rouge(const std::string& hypothesis, const std::string& reference, RougeVariant variant,
          const EvalTokenizer& tokenizer);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// Token to vector map for embed_score.
class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual std::string id() const = 0;
  virtual ColVector embed(const std::string& token) const = 0;
};

/// Greedy cosine matching: precision averages, over hypothesis tokens, the
/// best similarity to any reference token; recall is symmetric. Throws
/// std::invalid_argument on an empty side or a zero-norm vector.
PRF embed_score(const Tokens& hypothesis, const Tokens& reference, const TokenEmbedder& embedder);

}  // namespace xlgen::eval
