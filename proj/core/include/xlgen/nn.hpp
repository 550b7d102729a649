#pragma once

// Transformer building blocks with hand-written backward passes. Activations
// of all sequences in a batch are packed row-wise into one matrix; attention
// is restricted to matching (query, key) segments.

#include <string>
#include <vector>

#include "xlgen/rng.hpp"
#include "xlgen/tensor.hpp"

namespace xlgen::nn {

struct Segment {
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
};

/// Inverted-dropout mask: entries are 0 or 1/(1-p).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng);

/// Row-wise log-softmax.
Matrix log_softmax(const Matrix& logits);

/// Gradient of a row-wise log-softmax given its output and upstream grad.
Matrix log_softmax_backward(const Matrix& log_probs, const Matrix& d_log_probs);

struct Linear {
  std::size_t weight = 0;  // in x out
  std::size_t bias = 0;    // 1 x out

  static Linear create(ParameterStore& store, const std::string& prefix,
                       const std::string& group, Eigen::Index in, Eigen::Index out);

  Matrix forward(const ParameterStore& store, const Matrix& x) const;
  // Accumulates parameter gradients; returns dL/dx.
  Matrix backward(ParameterStore& store, const Matrix& x, const Matrix& dy) const;
};

struct LayerNorm {
  std::size_t gain = 0;
  std::size_t shift = 0;
  static constexpr double kEpsilon = 1e-5;

  struct Cache {
    Matrix normalized;
    ColVector inv_std;
  };

  static LayerNorm create(ParameterStore& store, const std::string& prefix,
                          const std::string& group, Eigen::Index dim);

  Matrix forward(const ParameterStore& store, const Matrix& x, Cache* cache) const;
  Matrix backward(ParameterStore& store, const Cache& cache, const Matrix& dy) const;
};

struct Attention {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
  int heads = 1;

  struct Cache {
    Matrix query_in;
    Matrix key_in;
    Matrix q, k, v;
    std::vector<Matrix> probs;  // one per (segment, head)
    Matrix context;
  };

  static Attention create(ParameterStore& store, const std::string& prefix,
                          const std::string& group, Eigen::Index dim, int heads);

  Matrix forward(const ParameterStore& store, const Matrix& query_in, const Matrix& key_in,
                 const std::vector<Segment>& q_segments, const std::vector<Segment>& kv_segments,
                 bool causal, Cache* cache) const;

  /// Attention over already-projected keys and values (inference only).
  Matrix forward_projected(const ParameterStore& store, const Matrix& query_in, const Matrix& k,
                           const Matrix& v, const std::vector<Segment>& q_segments,
                           const std::vector<Segment>& kv_segments, bool causal) const;

  struct Grads {
    Matrix d_query_in;
    Matrix d_key_in;
  };
  Grads backward(ParameterStore& store, const Cache& cache, const Matrix& dy,
                 const std::vector<Segment>& q_segments,
                 const std::vector<Segment>& kv_segments) const;
};

struct FeedForward {
  Linear fc1;
  Linear fc2;

  struct Cache {
    Matrix input;
    Matrix pre;
    Matrix act;
  };

  static FeedForward create(ParameterStore& store, const std::string& prefix,
                            const std::string& group, Eigen::Index dim, Eigen::Index hidden);

  Matrix forward(const ParameterStore& store, const Matrix& x, Cache* cache) const;
  Matrix backward(ParameterStore& store, const Cache& cache, const Matrix& dy) const;
};

}  // namespace xlgen::nn
