#include "xlgen/ewc.hpp"

#include <cmath>
#include <stdexcept>

#include "xlgen/loss.hpp"

namespace xlgen {

void EwcState::validate() const {
  if (fisher.size() != anchor.size()) throw std::invalid_argument("ewc: fisher/anchor size mismatch");
  if (!(strength >= 0.0)) throw std::invalid_argument("ewc: strength must be >= 0");
  for (double f : fisher) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw std::invalid_argument("ewc: fisher entries must be finite and >= 0");
  }
}

namespace {

void check_size(std::size_t n, const EwcState& state) {
  if (n != state.anchor.size() || n != state.fisher.size()) {
    throw std::invalid_argument("ewc: parameter count " + std::to_string(n) +
                                " does not match state of size " + std::to_string(state.anchor.size()));
  }
}

}  // namespace

double ewc_penalty(std::span<const double> theta, const EwcState& state) {
  check_size(theta.size(), state);
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - state.anchor[i];
    sum += state.fisher[i] * d * d;
  }
  return 0.5 * state.strength * sum;
}

std::vector<double> ewc_gradient(std::span<const double> theta, const EwcState& state) {
  check_size(theta.size(), state);
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    g[i] = state.strength * state.fisher[i] * (theta[i] - state.anchor[i]);
  }
  return g;
}

std::vector<double> flatten(const ParameterStore& params) {
  std::vector<double> out;
  out.reserve(params.numel());
  for (const auto& p : params) out.insert(out.end(), p.value.data(), p.value.data() + p.value.size());
  return out;
}

double ewc_penalty(const ParameterStore& params, const EwcState& state) {
  check_size(params.numel(), state);
  double sum = 0.0;
  std::size_t k = 0;
  for (const auto& p : params) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i, ++k) {
      const double d = p.value.data()[i] - state.anchor[k];
      sum += state.fisher[k] * d * d;
    }
  }
  return 0.5 * state.strength * sum;
}

double ewc_accumulate(ParameterStore& params, const EwcState& state,
                      const std::vector<bool>& trainable) {
  check_size(params.numel(), state);
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    auto& p = params[j];
    const bool update = trainable.empty() || trainable[j];
    for (Eigen::Index i = 0; i < p.value.size(); ++i, ++k) {
      const double d = p.value.data()[i] - state.anchor[k];
      sum += state.fisher[k] * d * d;
      if (update) p.grad.data()[i] += state.strength * state.fisher[k] * d;
    }
  }
  return 0.5 * state.strength * sum;
}

EwcState estimate_fisher(std::span<const double> theta,
                         const std::function<std::vector<double>(std::size_t)>& sample_gradient,
                         std::size_t n_samples, double strength) {
  if (n_samples == 0) throw std::invalid_argument("estimate_fisher: n_samples must be > 0");
  EwcState state{std::vector<double>(theta.size(), 0.0), {theta.begin(), theta.end()}, strength};
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto g = sample_gradient(s);
    if (g.size() != theta.size()) throw std::invalid_argument("estimate_fisher: gradient size mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) state.fisher[i] += g[i] * g[i];
  }
  for (double& f : state.fisher) f /= static_cast<double>(n_samples);
  state.validate();
  return state;
}

EwcState estimate_fisher(Seq2SeqModel& model, std::span<const EncodedPair> data,
                         std::size_t n_samples, double strength) {
  if (data.empty()) throw std::invalid_argument("estimate_fisher: empty dataset");
  auto& params = model.parameters();
  const auto theta = flatten(params);
  auto gradient = [&](std::size_t s) {
    params.zero_grad();
    const auto& example = data[s % data.size()];
    const auto pass = model.forward(std::span(&example, 1), {});
    const auto loss = loss_label_smoothed(pass.log_probs, pass.targets, 0.0, Vocabulary::kPad, true);
    model.backward(pass, loss.grad);
    std::vector<double> g;
    g.reserve(theta.size());
    for (const auto& p : params) g.insert(g.end(), p.grad.data(), p.grad.data() + p.grad.size());
    return g;
  };
  auto state = estimate_fisher(theta, gradient, n_samples, strength);
  params.zero_grad();
  return state;
}

}  // namespace xlgen
