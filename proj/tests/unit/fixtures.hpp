#pragma once

// Small helpers shared by the unit tests.

#include <string>
#include <vector>

#include "xlgen/model.hpp"
#include "xlgen/rng.hpp"
#include "xlgen/vocab.hpp"

namespace xlgen::testing {

inline Vocabulary toy_vocab(int words_per_lang = 6) {
  std::vector<std::string> texts;
  for (const char* code : {"aa", "bb"}) {
    std::string line;
    for (int i = 0; i < words_per_lang; ++i) line += std::string(code) + "_" + std::to_string(i) + " ";
    texts.push_back(line);
  }
  return Vocabulary::build({LanguageTag("aa"), LanguageTag("bb")}, texts);
}

inline ModelConfig tiny_config(int vocab_size) {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.ffn_dim = 16;
  cfg.vocab_size = vocab_size;
  cfg.max_positions = 32;
  cfg.dropout = 0.0;
  cfg.init_std = 0.3;
  return cfg;
}

// Random pair whose payload words come from language `src` and target words
// from language `tgt`.
inline EncodedPair random_pair(const Vocabulary& vocab, Rng& rng, const std::string& src,
                               const std::string& tgt, int max_len = 5) {
  auto words = [&](const std::string& code) {
    std::vector<TokenId> ids;
    const int n = static_cast<int>(rng.uniform_int(1, max_len));
    for (int i = 0; i < n; ++i) {
      ids.push_back(vocab.id(code + "_" + std::to_string(rng.uniform_index(6))));
    }
    return ids;
  };
  EncodedPair p{tag_sequence(words(src), LanguageTag(src), LanguageTag(tgt), vocab), words(tgt)};
  p.target.push_back(Vocabulary::kEos);
  return p;
}

}  // namespace xlgen::testing
