#include "xlgen/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace xlgen {

Adam::Adam(const ParameterStore& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(ParameterStore& params, double lr, const std::vector<bool>& trainable) {
  if (params.size() != m_.size() || trainable.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: parameter layout changed");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!trainable[i]) continue;
    auto& p = params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

double clip_grad_norm(ParameterStore& params, double max_norm, const std::vector<bool>& trainable) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (trainable[i]) sq += params[i].grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-12);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (trainable[i]) params[i].grad *= scale;
    }
  }
  return norm;
}

}  // namespace xlgen
