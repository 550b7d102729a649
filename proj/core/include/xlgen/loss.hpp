#pragma once

#include <span>

#include "xlgen/tensor.hpp"
#include "xlgen/vocab.hpp"

namespace xlgen {

struct LossResult {
  double loss = 0.0;
  std::size_t tokens = 0;  // non-pad targets
  Matrix grad;             // d loss / d log_probs, empty unless requested
};

/// Label-smoothed cross-entropy averaged over non-pad targets:
///   (1 - eps) * -log p(target) + eps * mean_v(-log p(v)).
/// Throws std::invalid_argument on a row/target count mismatch or an
/// out-of-range target.
LossResult loss_label_smoothed(const Matrix& log_probs, std::span<const TokenId> targets,
                               double smoothing, TokenId pad_id, bool with_grad = false);

}  // namespace xlgen
