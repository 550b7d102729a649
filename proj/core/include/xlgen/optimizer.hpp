#pragma once

#include <cstdint>
#include <vector>

#include "xlgen/tensor.hpp"

namespace xlgen {

/// Adam with bias correction. Parameters whose trainable flag is false are
/// skipped entirely: their values and moment estimates are never touched.
class Adam {
 public:
  Adam(const ParameterStore& params, double beta1, double beta2, double eps);

  void step(ParameterStore& params, double lr, const std::vector<bool>& trainable);
  std::int64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

/// Scales trainable gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(ParameterStore& params, double max_norm, const std::vector<bool>& trainable);

}  // namespace xlgen
