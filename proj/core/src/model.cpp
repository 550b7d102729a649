#include "xlgen/model.hpp"

#include <stdexcept>

namespace xlgen {

void ModelConfig::validate() const {
  if (n_layers < 1) throw std::invalid_argument("model: n_layers must be >= 1");
  if (n_heads < 1 || d_model < 1 || d_model % n_heads != 0) {
    throw std::invalid_argument("model: d_model must be a positive multiple of n_heads");
  }
  if (ffn_dim < 1) throw std::invalid_argument("model: ffn_dim must be >= 1");
  if (vocab_size < 5) throw std::invalid_argument("model: vocab_size too small");
  if (max_positions < 2) throw std::invalid_argument("model: max_positions must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("model: dropout in [0,1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw std::invalid_argument("model: label_smoothing in [0,1)");
  }
}

TaggedSequence tag_sequence(std::span<const TokenId> tokens, const LanguageTag& src_lang,
                            const LanguageTag& tgt_lang, const Vocabulary& vocab) {
  const TokenId from = vocab.from_tag(src_lang);
  const TokenId to = vocab.to_tag(tgt_lang);
  TaggedSequence seq{{tokens.begin(), tokens.end()}, src_lang, tgt_lang};
  for (TokenId id : tokens) {
    if (vocab.is_tag(id)) throw std::invalid_argument("tag_sequence: payload contains a tag id");
  }
  seq.tokens.push_back(from);
  seq.tokens.push_back(to);
  return seq;
}

EncodedPair encode_pair(const TextPair& pair, const Vocabulary& vocab) {
  const auto src_ids = vocab.encode(pair.src);
  EncodedPair out{tag_sequence(src_ids, LanguageTag(pair.src_lang), LanguageTag(pair.tgt_lang),
                               vocab),
                  vocab.encode(pair.tgt)};
  out.target.push_back(Vocabulary::kEos);
  return out;
}

struct Seq2SeqModel::EncoderLayerCache {
  nn::LayerNorm::Cache attn_norm;
  nn::Attention::Cache attn;
  Matrix attn_drop;
  nn::LayerNorm::Cache ffn_norm;
  nn::FeedForward::Cache ffn;
  Matrix ffn_drop;
};

struct Seq2SeqModel::DecoderLayerCache {
  nn::LayerNorm::Cache self_norm;
  nn::Attention::Cache self_attn;
  Matrix self_drop;
  nn::LayerNorm::Cache cross_norm;
  nn::Attention::Cache cross_attn;
  Matrix cross_drop;
  nn::LayerNorm::Cache ffn_norm;
  nn::FeedForward::Cache ffn;
  Matrix ffn_drop;
};

struct Seq2SeqModel::Cache {
  std::vector<nn::Segment> src_segments;
  std::vector<nn::Segment> tgt_segments;
  std::vector<TokenId> src_ids;
  std::vector<TokenId> dec_ids;
  nn::LayerNorm::Cache enc_embed_norm;
  Matrix enc_embed_drop;
  std::vector<EncoderLayerCache> enc;
  nn::LayerNorm::Cache enc_final;
  Matrix enc_out;
  nn::LayerNorm::Cache dec_embed_norm;
  Matrix dec_embed_drop;
  std::vector<DecoderLayerCache> dec;
  nn::LayerNorm::Cache dec_final;
  Matrix dec_out;
};

Seq2SeqModel::ForwardPass::ForwardPass() = default;
Seq2SeqModel::ForwardPass::ForwardPass(ForwardPass&&) noexcept = default;
Seq2SeqModel::ForwardPass& Seq2SeqModel::ForwardPass::operator=(ForwardPass&&) noexcept = default;
Seq2SeqModel::ForwardPass::~ForwardPass() = default;

Seq2SeqModel::Seq2SeqModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const Eigen::Index d = config_.d_model;
  const Eigen::Index v = config_.vocab_size;
  const Eigen::Index p = config_.max_positions;

  embed_tokens_ = params_.add("embed_tokens.weight", "word_embeddings", v, d);

  enc_positions_ = params_.add("encoder.embed_positions.weight", "encoder.embed_positions", p, d);
  enc_embed_norm_ = nn::LayerNorm::create(params_, "encoder.layernorm_embedding",
                                          "encoder.layernorm_embedding", d);
  for (int i = 0; i < config_.n_layers; ++i) {
    const std::string prefix = "encoder.layers." + std::to_string(i);
    EncoderLayer layer;
    layer.self_attn_norm = nn::LayerNorm::create(params_, prefix + ".self_attn_layer_norm", prefix, d);
    layer.self_attn = nn::Attention::create(params_, prefix + ".self_attn", prefix, d, config_.n_heads);
    layer.ffn_norm = nn::LayerNorm::create(params_, prefix + ".final_layer_norm", prefix, d);
    layer.ffn = nn::FeedForward::create(params_, prefix, prefix, d, config_.ffn_dim);
    encoder_.push_back(layer);
  }
  if (config_.extra_layer_norm) {
    enc_final_norm_ = nn::LayerNorm::create(params_, "encoder.layer_norm", "encoder.layer_norm", d);
  }

  dec_positions_ = params_.add("decoder.embed_positions.weight", "decoder.embed_positions", p, d);
  dec_embed_norm_ = nn::LayerNorm::create(params_, "decoder.layernorm_embedding",
                                          "decoder.layernorm_embedding", d);
  for (int i = 0; i < config_.n_layers; ++i) {
    const std::string prefix = "decoder.layers." + std::to_string(i);
    DecoderLayer layer;
    layer.self_attn_norm = nn::LayerNorm::create(params_, prefix + ".self_attn_layer_norm", prefix, d);
    layer.self_attn = nn::Attention::create(params_, prefix + ".self_attn", prefix, d, config_.n_heads);
    layer.cross_attn_norm =
        nn::LayerNorm::create(params_, prefix + ".encoder_attn_layer_norm", prefix, d);
    layer.cross_attn =
        nn::Attention::create(params_, prefix + ".encoder_attn", prefix, d, config_.n_heads);
    layer.ffn_norm = nn::LayerNorm::create(params_, prefix + ".final_layer_norm", prefix, d);
    layer.ffn = nn::FeedForward::create(params_, prefix, prefix, d, config_.ffn_dim);
    decoder_.push_back(layer);
  }
  if (config_.extra_layer_norm) {
    dec_final_norm_ = nn::LayerNorm::create(params_, "decoder.layer_norm", "decoder.layer_norm", d);
  }
  if (!config_.tie_output_projection) {
    output_projection_ = params_.add("output_projection.weight", "output_projection", d, v);
  }
}

void Seq2SeqModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params_) {
    const bool is_norm = p.name.find("norm") != std::string::npos;
    const bool is_bias = p.name.ends_with(".bias");
    if (is_norm || is_bias) continue;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      p.value.data()[i] = rng.normal(0.0, config_.init_std);
    }
  }
}

void Seq2SeqModel::check_ids(std::span<const TokenId> ids) const {
  for (TokenId id : ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw std::invalid_argument("token id " + std::to_string(id) + " outside vocabulary of " +
                                  std::to_string(config_.vocab_size));
    }
  }
}

Matrix Seq2SeqModel::embed(std::span<const TokenId> ids, const std::vector<nn::Segment>& segments,
                           std::size_t positions) const {
  const Matrix& tok = params_[embed_tokens_].value;
  const Matrix& pos = params_[positions].value;
  Matrix x(static_cast<Eigen::Index>(ids.size()), config_.d_model);
  for (const auto& seg : segments) {
    for (Eigen::Index t = 0; t < seg.length; ++t) {
      const Eigen::Index row = seg.offset + t;
      x.row(row) = tok.row(ids[static_cast<std::size_t>(row)]) + pos.row(t);
    }
  }
  return x;
}

Matrix Seq2SeqModel::logits(const Matrix& hidden) const {
  if (config_.tie_output_projection) {
    return hidden * params_[embed_tokens_].value.transpose();
  }
  return hidden * params_[output_projection_].value;
}

namespace {

void apply_dropout(Matrix& x, double p, Rng* rng, Matrix* mask_out) {
  if (p <= 0.0) return;
  Matrix mask = nn::dropout_mask(x.rows(), x.cols(), p, *rng);
  x.array() *= mask.array();
  if (mask_out) *mask_out = std::move(mask);
}

Matrix dropout_backward(const Matrix& dy, const Matrix& mask) {
  if (mask.size() == 0) return dy;
  return dy.array() * mask.array();
}

}  // namespace

Seq2SeqModel::ForwardPass Seq2SeqModel::forward(std::span<const EncodedPair> batch,
                                                const ForwardOptions& options) const {
  if (batch.empty()) throw std::invalid_argument("forward: empty batch");
  const double p = options.dropout;
  if (p > 0.0 && options.rng == nullptr) throw std::invalid_argument("forward: dropout needs rng");

  auto cache = std::make_unique<Cache>();
  ForwardPass pass;
  Eigen::Index src_rows = 0, tgt_rows = 0;
  for (const auto& ex : batch) {
    const auto src_len = static_cast<Eigen::Index>(ex.source.tokens.size());
    const auto tgt_len = static_cast<Eigen::Index>(ex.target.size());
    if (src_len > config_.max_positions || tgt_len > config_.max_positions) {
      throw std::invalid_argument("forward: sequence longer than max_positions (" +
                                  std::to_string(config_.max_positions) + ")");
    }
    if (src_len == 0 || tgt_len == 0) throw std::invalid_argument("forward: empty sequence");
    check_ids(ex.source.tokens);
    check_ids(ex.target);
    cache->src_segments.push_back({src_rows, src_len});
    cache->tgt_segments.push_back({tgt_rows, tgt_len});
    src_rows += src_len;
    tgt_rows += tgt_len;
    cache->src_ids.insert(cache->src_ids.end(), ex.source.tokens.begin(), ex.source.tokens.end());
    cache->dec_ids.push_back(ex.source.decoder_start());
    cache->dec_ids.insert(cache->dec_ids.end(), ex.target.begin(), ex.target.end() - 1);
    pass.targets.insert(pass.targets.end(), ex.target.begin(), ex.target.end());
  }
  const auto& src_seg = cache->src_segments;
  const auto& tgt_seg = cache->tgt_segments;
  const bool keep = options.keep_cache;

  // Encoder.
  Matrix x = embed(cache->src_ids, src_seg, enc_positions_);
  x = enc_embed_norm_.forward(params_, x, &cache->enc_embed_norm);
  apply_dropout(x, p, options.rng, &cache->enc_embed_drop);
  cache->enc.resize(encoder_.size());
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    const auto& layer = encoder_[l];
    auto& c = cache->enc[l];
    Matrix h = layer.self_attn_norm.forward(params_, x, &c.attn_norm);
    Matrix a = layer.self_attn.forward(params_, h, h, src_seg, src_seg, false, &c.attn);
    apply_dropout(a, p, options.rng, &c.attn_drop);
    x += a;
    h = layer.ffn_norm.forward(params_, x, &c.ffn_norm);
    Matrix f = layer.ffn.forward(params_, h, &c.ffn);
    apply_dropout(f, p, options.rng, &c.ffn_drop);
    x += f;
  }
  if (config_.extra_layer_norm) x = enc_final_norm_.forward(params_, x, &cache->enc_final);
  cache->enc_out = std::move(x);
  const Matrix& memory = cache->enc_out;

  // Decoder.
  Matrix y = embed(cache->dec_ids, tgt_seg, dec_positions_);
  y = dec_embed_norm_.forward(params_, y, &cache->dec_embed_norm);
  apply_dropout(y, p, options.rng, &cache->dec_embed_drop);
  cache->dec.resize(decoder_.size());
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const auto& layer = decoder_[l];
    auto& c = cache->dec[l];
    Matrix h = layer.self_attn_norm.forward(params_, y, &c.self_norm);
    Matrix a = layer.self_attn.forward(params_, h, h, tgt_seg, tgt_seg, true, &c.self_attn);
    apply_dropout(a, p, options.rng, &c.self_drop);
    y += a;
    h = layer.cross_attn_norm.forward(params_, y, &c.cross_norm);
    a = layer.cross_attn.forward(params_, h, memory, tgt_seg, src_seg, false, &c.cross_attn);
    apply_dropout(a, p, options.rng, &c.cross_drop);
    y += a;
    h = layer.ffn_norm.forward(params_, y, &c.ffn_norm);
    Matrix f = layer.ffn.forward(params_, h, &c.ffn);
    apply_dropout(f, p, options.rng, &c.ffn_drop);
    y += f;
  }
  if (config_.extra_layer_norm) y = dec_final_norm_.forward(params_, y, &cache->dec_final);

  pass.log_probs = nn::log_softmax(logits(y));
  cache->dec_out = std::move(y);
  if (keep) pass.cache = std::move(cache);
  return pass;
}

void Seq2SeqModel::backward(const ForwardPass& pass, const Matrix& d_log_probs) {
  if (!pass.cache) throw std::logic_error("backward: forward pass was run without cache");
  const Cache& cache = *pass.cache;
  const auto& src_seg = cache.src_segments;
  const auto& tgt_seg = cache.tgt_segments;

  const Matrix d_logits = nn::log_softmax_backward(pass.log_probs, d_log_probs);
  Matrix dy;
  if (config_.tie_output_projection) {
    params_[embed_tokens_].grad.noalias() += d_logits.transpose() * cache.dec_out;
    dy = d_logits * params_[embed_tokens_].value;
  } else {
    params_[output_projection_].grad.noalias() += cache.dec_out.transpose() * d_logits;
    dy = d_logits * params_[output_projection_].value.transpose();
  }
  if (config_.extra_layer_norm) dy = dec_final_norm_.backward(params_, cache.dec_final, dy);

  Matrix d_memory = Matrix::Zero(cache.enc_out.rows(), cache.enc_out.cols());
  for (std::size_t l = decoder_.size(); l-- > 0;) {
    const auto& layer = decoder_[l];
    const auto& c = cache.dec[l];
    Matrix d = dropout_backward(dy, c.ffn_drop);
    d = layer.ffn.backward(params_, c.ffn, d);
    dy += layer.ffn_norm.backward(params_, c.ffn_norm, d);

    d = dropout_backward(dy, c.cross_drop);
    auto cross = layer.cross_attn.backward(params_, c.cross_attn, d, tgt_seg, src_seg);
    d_memory += cross.d_key_in;
    dy += layer.cross_attn_norm.backward(params_, c.cross_norm, cross.d_query_in);

    d = dropout_backward(dy, c.self_drop);
    auto self = layer.self_attn.backward(params_, c.self_attn, d, tgt_seg, tgt_seg);
    self.d_query_in += self.d_key_in;
    dy += layer.self_attn_norm.backward(params_, c.self_norm, self.d_query_in);
  }
  dy = dropout_backward(dy, cache.dec_embed_drop);
  dy = dec_embed_norm_.backward(params_, cache.dec_embed_norm, dy);
  {
    auto& tok = params_[embed_tokens_].grad;
    auto& pos = params_[dec_positions_].grad;
    for (const auto& seg : tgt_seg) {
      for (Eigen::Index t = 0; t < seg.length; ++t) {
        const Eigen::Index row = seg.offset + t;
        tok.row(cache.dec_ids[static_cast<std::size_t>(row)]) += dy.row(row);
        pos.row(t) += dy.row(row);
      }
    }
  }

  Matrix dx = std::move(d_memory);
  if (config_.extra_layer_norm) dx = enc_final_norm_.backward(params_, cache.enc_final, dx);
  for (std::size_t l = encoder_.size(); l-- > 0;) {
    const auto& layer = encoder_[l];
    const auto& c = cache.enc[l];
    Matrix d = dropout_backward(dx, c.ffn_drop);
    d = layer.ffn.backward(params_, c.ffn, d);
    dx += layer.ffn_norm.backward(params_, c.ffn_norm, d);

    d = dropout_backward(dx, c.attn_drop);
    auto self = layer.self_attn.backward(params_, c.attn, d, src_seg, src_seg);
    self.d_query_in += self.d_key_in;
    dx += layer.self_attn_norm.backward(params_, c.attn_norm, self.d_query_in);
  }
  dx = dropout_backward(dx, cache.enc_embed_drop);
  dx = enc_embed_norm_.backward(params_, cache.enc_embed_norm, dx);
  auto& tok = params_[embed_tokens_].grad;
  auto& pos = params_[enc_positions_].grad;
  for (const auto& seg : src_seg) {
    for (Eigen::Index t = 0; t < seg.length; ++t) {
      const Eigen::Index row = seg.offset + t;
      tok.row(cache.src_ids[static_cast<std::size_t>(row)]) += dx.row(row);
      pos.row(t) += dx.row(row);
    }
  }
}

Seq2SeqModel::EncoderOutput Seq2SeqModel::encode(std::span<const TokenId> source) const {
  if (source.empty()) throw std::invalid_argument("encode: empty source");
  if (static_cast<int>(source.size()) > config_.max_positions) {
    throw std::invalid_argument("encode: source longer than max_positions");
  }
  check_ids(source);
  const std::vector<nn::Segment> seg{{0, static_cast<Eigen::Index>(source.size())}};
  Matrix x = embed(source, seg, enc_positions_);
  x = enc_embed_norm_.forward(params_, x, nullptr);
  for (const auto& layer : encoder_) {
    Matrix h = layer.self_attn_norm.forward(params_, x, nullptr);
    x += layer.self_attn.forward(params_, h, h, seg, seg, false, nullptr);
    h = layer.ffn_norm.forward(params_, x, nullptr);
    x += layer.ffn.forward(params_, h, nullptr);
  }
  if (config_.extra_layer_norm) x = enc_final_norm_.forward(params_, x, nullptr);
  EncoderOutput out;
  for (const auto& layer : decoder_) {
    out.cross_keys.push_back(layer.cross_attn.key.forward(params_, x));
    out.cross_values.push_back(layer.cross_attn.value.forward(params_, x));
  }
  out.states = std::move(x);
  return out;
}

Matrix Seq2SeqModel::next_token_log_probs(const EncoderOutput& encoded,
                                          const std::vector<std::vector<TokenId>>& prefixes) const {
  if (prefixes.empty()) return Matrix(0, config_.vocab_size);
  std::vector<nn::Segment> q_seg;
  std::vector<nn::Segment> kv_seg;
  std::vector<TokenId> ids;
  Eigen::Index rows = 0;
  for (const auto& prefix : prefixes) {
    const auto len = static_cast<Eigen::Index>(prefix.size());
    if (len == 0 || len > config_.max_positions) {
      throw std::invalid_argument("next_token_log_probs: prefix length out of range");
    }
    check_ids(prefix);
    q_seg.push_back({rows, len});
    kv_seg.push_back({0, encoded.states.rows()});
    rows += len;
    ids.insert(ids.end(), prefix.begin(), prefix.end());
  }
  Matrix y = embed(ids, q_seg, dec_positions_);
  y = dec_embed_norm_.forward(params_, y, nullptr);
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const auto& layer = decoder_[l];
    Matrix h = layer.self_attn_norm.forward(params_, y, nullptr);
    y += layer.self_attn.forward(params_, h, h, q_seg, q_seg, true, nullptr);
    h = layer.cross_attn_norm.forward(params_, y, nullptr);
    y += layer.cross_attn.forward_projected(params_, h, encoded.cross_keys[l],
                                            encoded.cross_values[l], q_seg, kv_seg, false);
    h = layer.ffn_norm.forward(params_, y, nullptr);
    y += layer.ffn.forward(params_, h, nullptr);
  }
  Matrix last(static_cast<Eigen::Index>(prefixes.size()), config_.d_model);
  for (std::size_t i = 0; i < q_seg.size(); ++i) {
    last.row(static_cast<Eigen::Index>(i)) = y.row(q_seg[i].offset + q_seg[i].length - 1);
  }
  if (config_.extra_layer_norm) last = dec_final_norm_.forward(params_, last, nullptr);
  return nn::log_softmax(logits(last));
}

}  // namespace xlgen
