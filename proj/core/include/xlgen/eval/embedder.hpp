#pragma once

#include "xlgen/eval/metrics.hpp"
#include "xlgen/model.hpp"
#include "xlgen/vocab.hpp"

namespace xlgen::eval {

/// Rows of a model's word-embedding matrix; out-of-vocabulary tokens use
/// the <unk> row.
class ModelTokenEmbedder final : public TokenEmbedder {
 public:
  ModelTokenEmbedder(const Seq2SeqModel& model, const Vocabulary& vocab);
  std::string id() const override { return "model-word-embeddings"; }
  ColVector embed(const std::string& token) const override;

 private:
  Matrix table_;
  Vocabulary vocab_;
};

}  // namespace xlgen::eval
