#include "xlgen/schedule.hpp"

#include <algorithm>
#include <stdexcept>

#include "xlgen/error.hpp"

namespace xlgen {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (warmup_steps < 0) throw ConfigError("train: warmup_steps must be >= 0");
  if (max_steps < 0) throw ConfigError("train: max_steps must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must be in [0,1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be > 0");
  if (clip_norm < 0.0) throw ConfigError("train: clip_norm must be >= 0");
  if (batch_tokens == 0) throw ConfigError("train: batch_tokens must be > 0");
  if (eval_interval <= 0) throw ConfigError("train: eval_interval must be > 0");
  for (std::size_t i = 0; i < dropout_schedule.size(); ++i) {
    const auto& m = dropout_schedule[i];
    if (!(m.dropout >= 0.0 && m.dropout < 1.0)) throw ConfigError("train: dropout in [0,1)");
    if (i > 0 && m.step <= dropout_schedule[i - 1].step) {
      throw ConfigError("train: dropout milestones must have increasing steps");
    }
  }
}

ScheduleValue lr_and_dropout_at(std::int64_t step, const TrainConfig& cfg) {
  if (step < 0) throw std::invalid_argument("lr_and_dropout_at: negative step");
  ScheduleValue out;
  const auto s = static_cast<double>(step);
  if (step < cfg.warmup_steps) {
    out.lr = cfg.lr * s / static_cast<double>(cfg.warmup_steps);
  } else if (cfg.max_steps > cfg.warmup_steps) {
    const double remaining = static_cast<double>(cfg.max_steps - step) /
                             static_cast<double>(cfg.max_steps - cfg.warmup_steps);
    out.lr = cfg.lr * std::clamp(remaining, 0.0, 1.0);
  } else {
    out.lr = step <= cfg.max_steps ? cfg.lr : 0.0;
  }
  for (const auto& m : cfg.dropout_schedule) {
    if (m.step <= step) out.dropout = m.dropout;
  }
  return out;
}

}  // namespace xlgen
