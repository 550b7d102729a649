#include "xlgen/nn.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace xlgen::nn {

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < p ? 0.0 : keep_scale;
  }
  return mask;
}

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

Matrix log_softmax_backward(const Matrix& log_probs, const Matrix& d_log_probs) {
  const ColVector row_sum = d_log_probs.rowwise().sum();
  Matrix d = d_log_probs;
  d.array() -= log_probs.array().exp().colwise() * row_sum.array();
  return d;
}

// ---------------------------------------------------------------- Linear

Linear Linear::create(ParameterStore& store, const std::string& prefix, const std::string& group,
                      Eigen::Index in, Eigen::Index out) {
  Linear l;
  l.weight = store.add(prefix + ".weight", group, in, out);
  l.bias = store.add(prefix + ".bias", group, 1, out);
  return l;
}

Matrix Linear::forward(const ParameterStore& store, const Matrix& x) const {
  Matrix y = x * store[weight].value;
  y.rowwise() += store[bias].value.row(0);
  return y;
}

Matrix Linear::backward(ParameterStore& store, const Matrix& x, const Matrix& dy) const {
  store[weight].grad.noalias() += x.transpose() * dy;
  store[bias].grad.row(0) += dy.colwise().sum();
  return dy * store[weight].value.transpose();
}

// ------------------------------------------------------------- LayerNorm

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& prefix,
                            const std::string& group, Eigen::Index dim) {
  LayerNorm ln;
  ln.gain = store.add(prefix + ".weight", group, 1, dim);
  ln.shift = store.add(prefix + ".bias", group, 1, dim);
  store[ln.gain].value.setOnes();
  return ln;
}

Matrix LayerNorm::forward(const ParameterStore& store, const Matrix& x, Cache* cache) const {
  const auto n = static_cast<double>(x.cols());
  const ColVector mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  const ColVector var = centered.array().square().rowwise().sum() / n;
  const ColVector inv_std = (var.array() + kEpsilon).rsqrt();
  Matrix normalized = centered.array().colwise() * inv_std.array();
  Matrix y = normalized.array().rowwise() * store[gain].value.row(0).array();
  y.rowwise() += store[shift].value.row(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
  }
  return y;
}

Matrix LayerNorm::backward(ParameterStore& store, const Cache& cache, const Matrix& dy) const {
  const auto& xhat = cache.normalized;
  store[gain].grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  store[shift].grad.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * store[gain].value.row(0).array();
  const auto n = static_cast<double>(dy.cols());
  const ColVector mean_dxhat = dxhat.rowwise().sum() / n;
  const ColVector mean_dxhat_xhat = (dxhat.array() * xhat.array()).rowwise().sum().matrix() / n;
  Matrix dx = dxhat;
  dx.colwise() -= mean_dxhat;
  dx.array() -= xhat.array().colwise() * mean_dxhat_xhat.array();
  dx.array().colwise() *= cache.inv_std.array();
  return dx;
}

// ------------------------------------------------------------- Attention

Attention Attention::create(ParameterStore& store, const std::string& prefix,
                            const std::string& group, Eigen::Index dim, int heads) {
  Attention a;
  a.query = Linear::create(store, prefix + ".q_proj", group, dim, dim);
  a.key = Linear::create(store, prefix + ".k_proj", group, dim, dim);
  a.value = Linear::create(store, prefix + ".v_proj", group, dim, dim);
  a.output = Linear::create(store, prefix + ".out_proj", group, dim, dim);
  a.heads = heads;
  return a;
}

namespace {

// Softmax attention for every (segment, head); fills `context` and,
// if given, the per-block probabilities.
void attend(const Matrix& q, const Matrix& k, const Matrix& v, int heads,
            const std::vector<Segment>& q_segments, const std::vector<Segment>& kv_segments,
            bool causal, Matrix& context, std::vector<Matrix>* probs_out) {
  const Eigen::Index dim = q.cols();
  const Eigen::Index head_dim = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  context.setZero(q.rows(), dim);
  if (probs_out) {
    probs_out->clear();
    probs_out->reserve(q_segments.size() * static_cast<std::size_t>(heads));
  }
  for (std::size_t s = 0; s < q_segments.size(); ++s) {
    const auto [q_off, q_len] = q_segments[s];
    const auto [k_off, k_len] = kv_segments[s];
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index col = h * head_dim;
      Matrix scores = q.block(q_off, col, q_len, head_dim) *
                      k.block(k_off, col, k_len, head_dim).transpose() * scale;
      if (causal) {
        // Query i of a causal segment may see keys 0..i + (k_len - q_len).
        const Eigen::Index shift = k_len - q_len;
        for (Eigen::Index i = 0; i < q_len; ++i) {
          for (Eigen::Index j = i + shift + 1; j < k_len; ++j) {
            scores(i, j) = -std::numeric_limits<double>::infinity();
          }
        }
      }
      for (Eigen::Index i = 0; i < q_len; ++i) {
        const double m = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - m).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      context.block(q_off, col, q_len, head_dim).noalias() =
          scores * v.block(k_off, col, k_len, head_dim);
      if (probs_out) probs_out->push_back(std::move(scores));
    }
  }
}

}  // namespace

Matrix Attention::forward(const ParameterStore& store, const Matrix& query_in,
                          const Matrix& key_in, const std::vector<Segment>& q_segments,
                          const std::vector<Segment>& kv_segments, bool causal,
                          Cache* cache) const {
  Matrix q = query.forward(store, query_in);
  Matrix k = key.forward(store, key_in);
  Matrix v = value.forward(store, key_in);
  Matrix context;
  attend(q, k, v, heads, q_segments, kv_segments, causal, context,
         cache ? &cache->probs : nullptr);
  Matrix y = output.forward(store, context);
  if (cache) {
    cache->query_in = query_in;
    cache->key_in = key_in;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
  }
  return y;
}

Matrix Attention::forward_projected(const ParameterStore& store, const Matrix& query_in,
                                    const Matrix& k, const Matrix& v,
                                    const std::vector<Segment>& q_segments,
                                    const std::vector<Segment>& kv_segments, bool causal) const {
  const Matrix q = query.forward(store, query_in);
  Matrix context;
  attend(q, k, v, heads, q_segments, kv_segments, causal, context, nullptr);
  return output.forward(store, context);
}

Attention::Grads Attention::backward(ParameterStore& store, const Cache& cache, const Matrix& dy,
                                     const std::vector<Segment>& q_segments,
                                     const std::vector<Segment>& kv_segments) const {
  const Matrix d_context = output.backward(store, cache.context, dy);
  const Eigen::Index dim = cache.q.cols();
  const Eigen::Index head_dim = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Matrix dq = Matrix::Zero(cache.q.rows(), dim);
  Matrix dk = Matrix::Zero(cache.k.rows(), dim);
  Matrix dv = Matrix::Zero(cache.v.rows(), dim);
  std::size_t block = 0;
  for (std::size_t s = 0; s < q_segments.size(); ++s) {
    const auto [q_off, q_len] = q_segments[s];
    const auto [k_off, k_len] = kv_segments[s];
    for (int h = 0; h < heads; ++h, ++block) {
      const Eigen::Index col = h * head_dim;
      const Matrix& p = cache.probs[block];
      const auto dctx = d_context.block(q_off, col, q_len, head_dim);
      dv.block(k_off, col, k_len, head_dim).noalias() += p.transpose() * dctx;
      const Matrix dp = dctx * cache.v.block(k_off, col, k_len, head_dim).transpose();
      const ColVector row_dot = (dp.array() * p.array()).rowwise().sum();
      Matrix ds = p.array() * (dp.array().colwise() - row_dot.array());
      ds *= scale;
      dq.block(q_off, col, q_len, head_dim).noalias() +=
          ds * cache.k.block(k_off, col, k_len, head_dim);
      dk.block(k_off, col, k_len, head_dim).noalias() +=
          ds.transpose() * cache.q.block(q_off, col, q_len, head_dim);
    }
  }
  Grads g;
  g.d_query_in = query.backward(store, cache.query_in, dq);
  g.d_key_in = key.backward(store, cache.key_in, dk);
  g.d_key_in += value.backward(store, cache.key_in, dv);
  return g;
}

// ----------------------------------------------------------- FeedForward

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

}  // namespace

FeedForward FeedForward::create(ParameterStore& store, const std::string& prefix,
                                const std::string& group, Eigen::Index dim,
                                Eigen::Index hidden) {
  FeedForward f;
  f.fc1 = Linear::create(store, prefix + ".fc1", group, dim, hidden);
  f.fc2 = Linear::create(store, prefix + ".fc2", group, hidden, dim);
  return f;
}

Matrix FeedForward::forward(const ParameterStore& store, const Matrix& x, Cache* cache) const {
  Matrix pre = fc1.forward(store, x);
  Matrix act = pre.unaryExpr(&gelu);
  Matrix y = fc2.forward(store, act);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return y;
}

Matrix FeedForward::backward(ParameterStore& store, const Cache& cache, const Matrix& dy) const {
  Matrix d_act = fc2.backward(store, cache.act, dy);
  d_act.array() *= cache.pre.unaryExpr(&gelu_grad).array();
  return fc1.backward(store, cache.input, d_act);
}

}  // namespace xlgen::nn
