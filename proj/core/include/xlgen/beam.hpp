#pragma once

#include <span>
#include <vector>

#include "xlgen/model.hpp"
#include "xlgen/tensor.hpp"
#include "xlgen/vocab.hpp"

namespace xlgen {

/// Next-token scorer used by the search routines. Each prefix starts with
/// the start token; the result has one log-probability row per prefix.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual Matrix next_log_probs(const std::vector<std::vector<TokenId>>& prefixes) const = 0;
};

struct BeamOptions {
  std::size_t beam_size = 5;
  std::size_t max_len = 64;  // generated tokens, </s> included
  // Finished hypotheses are ranked by score / length^length_penalty;
  // 0 disables normalization.
  double length_penalty = 0.0;
  TokenId eos = Vocabulary::kEos;
  std::vector<TokenId> banned;  // never generated (pad, tags, ...)
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // generated tokens, without the start token
  double score = 0.0;           // sum of log-probabilities
};

/// Standard beam search. At each step the alive hypotheses are expanded,
/// candidates ranked by score (ties by hypothesis then token index), and
/// among the top 2*beam candidates: those ending in </s> (or reaching
/// max_len) within the first `beam` ranks are finished; the rest refill the
/// beam. Returns the best finished hypothesis. Throws std::invalid_argument
/// if beam_size or max_len is zero.
Hypothesis beam_search(const StepScorer& scorer, TokenId start, const BeamOptions& options);

/// Argmax decoding until </s> or max_len.
Hypothesis greedy_search(const StepScorer& scorer, TokenId start, const BeamOptions& options);

/// Scorer view of an encoded source under a model.
class ModelScorer final : public StepScorer {
 public:
  ModelScorer(const Seq2SeqModel& model, std::span<const TokenId> source);
  Matrix next_log_probs(const std::vector<std::vector<TokenId>>& prefixes) const override;

 private:
  const Seq2SeqModel& model_;
  Seq2SeqModel::EncoderOutput encoded_;
};

/// Tokens that must never be generated: pad, unk, mask and language tags.
std::vector<TokenId> non_generable_tokens(const Vocabulary& vocab);

/// Beam-decodes a tagged source; generation starts from its target tag.
Hypothesis generate(const Seq2SeqModel& model, const TaggedSequence& source,
                    const BeamOptions& options);

}  // namespace xlgen
