#include "xlgen/eval/embedder.hpp"

namespace xlgen::eval {

ModelTokenEmbedder::ModelTokenEmbedder(const Seq2SeqModel& model, const Vocabulary& vocab)
    : table_(model.word_embeddings()), vocab_(vocab) {}

ColVector ModelTokenEmbedder::embed(const std::string& token) const {
  return table_.row(vocab_.id(token)).transpose();
}

}  // namespace xlgen::eval
