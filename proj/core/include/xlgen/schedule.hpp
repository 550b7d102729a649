#pragma once

#include <cstdint>
#include <vector>

namespace xlgen {

struct DropoutMilestone {
  std::int64_t step = 0;  // takes effect from this update on
  double dropout = 0.0;
};

/// Optimizer and schedule settings for one training phase.
struct TrainConfig {
  double lr = 3e-5;
  std::int64_t warmup_steps = 2500;
  std::int64_t max_steps = 10000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-6;
  double clip_norm = 0.0;  // 0 disables gradient clipping
  std::vector<DropoutMilestone> dropout_schedule{{0, 0.3}, {20000, 0.2}, {40000, 0.0}};
  std::size_t batch_tokens = 1024;
  std::int64_t eval_interval = 500;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
};

struct ScheduleValue {
  double lr = 0.0;
  double dropout = 0.0;
};

/// Linear warmup from 0 to cfg.lr over warmup_steps, then linear decay to 0
/// at max_steps. Dropout is that of the last milestone with step <= `step`.
ScheduleValue lr_and_dropout_at(std::int64_t step, const TrainConfig& cfg);

}  // namespace xlgen
