#include "xlgen/loss.hpp"

#include <stdexcept>

namespace xlgen {

LossResult loss_label_smoothed(const Matrix& log_probs, std::span<const TokenId> targets,
                               double smoothing, TokenId pad_id, bool with_grad) {
  if (static_cast<std::size_t>(log_probs.rows()) != targets.size()) {
    throw std::invalid_argument("loss: log_probs rows do not match target count");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw std::invalid_argument("loss: smoothing must lie in [0, 1)");
  }
  const auto vocab = log_probs.cols();
  LossResult out;
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const TokenId t = targets[i];
    if (t == pad_id) continue;
    if (t < 0 || t >= vocab) throw std::invalid_argument("loss: target id out of range");
    const auto row = static_cast<Eigen::Index>(i);
    const double nll = -log_probs(row, t);
    const double smooth = -log_probs.row(row).mean();
    total += (1.0 - smoothing) * nll + smoothing * smooth;
    ++out.tokens;
  }
  if (out.tokens == 0) return out;
  const double n = static_cast<double>(out.tokens);
  out.loss = total / n;
  if (with_grad) {
    out.grad = Matrix::Zero(log_probs.rows(), vocab);
    const double uniform = -smoothing / (static_cast<double>(vocab) * n);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i] == pad_id) continue;
      const auto row = static_cast<Eigen::Index>(i);
      out.grad.row(row).setConstant(uniform);
      out.grad(row, targets[i]) -= (1.0 - smoothing) / n;
    }
  }
  return out;
}

}  // namespace xlgen
