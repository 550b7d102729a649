#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xlgen/language.hpp"
#include "xlgen/nn.hpp"
#include "xlgen/records.hpp"
#include "xlgen/tensor.hpp"
#include "xlgen/vocab.hpp"

namespace xlgen {

/// Encoder-decoder hyper-parameters. Defaults are the desk-scale model; the
/// full-size reference is 12 layers, 16 heads, d_model 1024.
struct ModelConfig {
  int n_layers = 2;  // per stack
  int n_heads = 4;
  int d_model = 128;
  int ffn_dim = 512;
  int vocab_size = 0;
  int max_positions = 256;
  double dropout = 0.3;
  double label_smoothing = 0.1;
  // Final layer norm on top of the encoder and of the decoder stack.
  bool extra_layer_norm = true;
  // Reuse the word embeddings as the output projection. When false the
  // projection is a separate d_model x vocab matrix in "output_projection".
  bool tie_output_projection = true;
  double init_std = 0.02;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Source token ids ending in from_token(src), to_token(tgt). The final tag
/// doubles as the decoder start token.
struct TaggedSequence {
  std::vector<TokenId> tokens;
  LanguageTag src_lang;
  LanguageTag tgt_lang;

  TokenId decoder_start() const { return tokens.back(); }
  std::span<const TokenId> payload() const { return {tokens.data(), tokens.size() - 2}; }
};

/// Appends the language tags. Throws std::invalid_argument if `tokens`
/// already holds a tag id or a language is not in the vocabulary.
TaggedSequence tag_sequence(std::span<const TokenId> tokens, const LanguageTag& src_lang,
                            const LanguageTag& tgt_lang, const Vocabulary& vocab);

/// A training pair: tagged source and target ids terminated by </s>.
struct EncodedPair {
  TaggedSequence source;
  std::vector<TokenId> target;
};

EncodedPair encode_pair(const TextPair& pair, const Vocabulary& vocab);

/// Desk-scale stand-in for a pre-trained multilingual seq2seq transformer.
///
/// Pre-LN layers, learned absolute positions per stack, layer norm on the
/// embeddings, GELU feed-forward. Parameter groups:
///   word_embeddings
///   encoder.embed_positions, encoder.layernorm_embedding,
///   encoder.layers.<i>, encoder.layer_norm
///   decoder.embed_positions, decoder.layernorm_embedding,
///   decoder.layers.<i>, decoder.layer_norm
///   output_projection (only when untied)
class Seq2SeqModel {
 public:
  explicit Seq2SeqModel(ModelConfig config);

  /// Draws all weights from N(0, init_std); biases zero, norms identity.
  void initialize(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  std::vector<std::string> groups() const { return params_.groups(); }
  const Matrix& word_embeddings() const { return params_[embed_tokens_].value; }

  struct EncoderLayerCache;
  struct DecoderLayerCache;
  struct Cache;

  struct ForwardOptions {
    double dropout = 0.0;
    Rng* rng = nullptr;  // required when dropout > 0
    bool keep_cache = true;
  };

  /// Teacher-forced pass. log_probs has one row per target token, in batch
  /// order; row i of sequence s predicts target[i] from prefix
  /// [decoder_start, target[0..i-1]].
  struct ForwardPass {
    ForwardPass();
    ForwardPass(ForwardPass&&) noexcept;
    ForwardPass& operator=(ForwardPass&&) noexcept;
    ~ForwardPass();

    Matrix log_probs;
    std::vector<TokenId> targets;
    std::unique_ptr<Cache> cache;
  };

  ForwardPass forward(std::span<const EncodedPair> batch, const ForwardOptions& options) const;

  /// Accumulates parameter gradients for upstream d loss / d log_probs.
  void backward(const ForwardPass& pass, const Matrix& d_log_probs);

  /// Encoder states plus per-layer cross-attention keys/values.
  struct EncoderOutput {
    Matrix states;
    std::vector<Matrix> cross_keys;
    std::vector<Matrix> cross_values;
  };

  EncoderOutput encode(std::span<const TokenId> source) const;

  /// Log-probabilities of the next token after each prefix (one row each).
  /// Prefixes start with the decoder start token.
  Matrix next_token_log_probs(const EncoderOutput& encoded,
                              const std::vector<std::vector<TokenId>>& prefixes) const;

 private:
  struct EncoderLayer {
    nn::LayerNorm self_attn_norm;
    nn::Attention self_attn;
    nn::LayerNorm ffn_norm;
    nn::FeedForward ffn;
  };
  struct DecoderLayer {
    nn::LayerNorm self_attn_norm;
    nn::Attention self_attn;
    nn::LayerNorm cross_attn_norm;
    nn::Attention cross_attn;
    nn::LayerNorm ffn_norm;
    nn::FeedForward ffn;
  };

  void check_ids(std::span<const TokenId> ids) const;
  Matrix embed(std::span<const TokenId> ids, const std::vector<nn::Segment>& segments,
               std::size_t positions) const;
  Matrix logits(const Matrix& hidden) const;

  ModelConfig config_;
  ParameterStore params_;
  std::size_t embed_tokens_ = 0;
  std::size_t enc_positions_ = 0;
  std::size_t dec_positions_ = 0;
  std::size_t output_projection_ = 0;
  nn::LayerNorm enc_embed_norm_;
  nn::LayerNorm dec_embed_norm_;
  nn::LayerNorm enc_final_norm_;
  nn::LayerNorm dec_final_norm_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
};

}  // namespace xlgen
