#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "xlgen/model.hpp"
#include "xlgen/tensor.hpp"

namespace xlgen {

/// Diagonal Fisher, anchor parameters and strength for the quadratic
/// consolidation penalty. Vectors are flat, in ParameterStore order.
struct EwcState {
  std::vector<double> fisher;
  std::vector<double> anchor;
  double strength = 1.0;

  /// Throws std::invalid_argument on mismatched sizes, negative or
  /// non-finite Fisher entries, or a negative strength.
  void validate() const;
};

/// (strength / 2) * sum_i F_i (theta_i - anchor_i)^2.
double ewc_penalty(std::span<const double> theta, const EwcState& state);

/// strength * F_i (theta_i - anchor_i).
std::vector<double> ewc_gradient(std::span<const double> theta, const EwcState& state);

/// Model-level forms over the flattened parameter store. The second adds
/// the penalty gradient into each Parameter::grad (entries with
/// trainable[k] == false are skipped) and returns the penalty.
double ewc_penalty(const ParameterStore& params, const EwcState& state);
double ewc_accumulate(ParameterStore& params, const EwcState& state,
                      const std::vector<bool>& trainable = {});

std::vector<double> flatten(const ParameterStore& params);

/// Empirical Fisher: mean over samples of the squared per-sample gradient;
/// anchor = theta.
EwcState estimate_fisher(std::span<const double> theta,
                         const std::function<std::vector<double>(std::size_t)>& sample_gradient,
                         std::size_t n_samples, double strength);

/// Model form: per-example gradients of the token-averaged NLL (no
/// smoothing, no dropout) over the first n_samples examples of `data`
/// (cycled if shorter). Throws std::invalid_argument on empty data.
EwcState estimate_fisher(Seq2SeqModel& model, std::span<const EncodedPair> data,
                         std::size_t n_samples, double strength);

}  // namespace xlgen
