#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "xlgen/ewc.hpp"
#include "xlgen/freeze.hpp"
#include "xlgen/model.hpp"
#include "xlgen/rng.hpp"
#include "xlgen/schedule.hpp"

namespace xlgen {

struct TrainRecord {
  std::int64_t step = 0;
  double loss = 0.0;  // batch loss incl. any EWC penalty
  double lr = 0.0;
  double dropout = 0.0;
};

struct ValidRecord {
  std::int64_t step = 0;
  double loss = 0.0;  // token-averaged NLL
};

struct PhaseResult {
  std::vector<TrainRecord> log;
  std::vector<ValidRecord> validation;
  std::int64_t steps = 0;
  // Step whose parameters the model holds on return; -1 if no validation
  // data was given (the final parameters are kept).
  std::int64_t best_step = -1;
  double best_valid_loss = 0.0;
  std::vector<bool> trainable;
  double seconds = 0.0;
};

/// Called at every evaluation point (step 0, every eval_interval updates
/// and the final update) with the current parameters.
using EvalCallback = std::function<void(std::int64_t step, const Seq2SeqModel&, double valid_loss)>;

/// Splits an epoch order into batches of at most `batch_tokens` source plus
/// target tokens (a single longer example forms its own batch).
std::vector<std::vector<std::size_t>> make_batches(std::span<const EncodedPair> data,
                                                   const std::vector<std::size_t>& order,
                                                   std::size_t batch_tokens);

/// Epoch order over task examples [0, n_task) and augmentation examples
/// [n_task, n_task + n_aug), uniformly shuffled together.
std::vector<std::size_t> mixed_epoch_order(std::size_t n_task, std::size_t n_aug, Rng& rng);

/// Token-averaged NLL over `data` with dropout off.
double validation_loss(const Seq2SeqModel& model, std::span<const EncodedPair> data,
                       std::size_t batch_tokens);

/// Generic loop: max_steps Adam updates over reshuffled epochs of `train`,
/// with the given trainable mask and optional EWC penalty. Validation at
/// each evaluation point; on return the model holds the parameters with the
/// lowest validation loss. Throws DivergenceError on a non-finite loss.
PhaseResult train_phase(Seq2SeqModel& model, std::span<const EncodedPair> train,
                        std::span<const EncodedPair> valid, const TrainConfig& cfg,
                        const std::vector<bool>& trainable, const EwcState* ewc = nullptr,
                        const EvalCallback& on_eval = {});

/// Auxiliary-task pre-training: nothing frozen. Throws DataError if
/// `train` is empty.
PhaseResult pretrain_auxiliary(Seq2SeqModel& model, std::span<const EncodedPair> train,
                               std::span<const EncodedPair> valid, const TrainConfig& cfg,
                               const EvalCallback& on_eval = {});

/// Task fine-tuning under a freeze policy. Augmentation examples are mixed
/// into every epoch. An EWC policy must carry its state. Throws DataError
/// if `task` is empty.
PhaseResult finetune(Seq2SeqModel& model, std::span<const EncodedPair> task,
                     std::span<const EncodedPair> valid, const FreezePolicy& policy,
                     std::span<const EncodedPair> augmentation, const TrainConfig& cfg,
                     const EvalCallback& on_eval = {});

inline constexpr std::size_t kFewShotCap = 1000;

/// Few-shot adaptation. By default every parameter is trainable; with
/// keep_frozen the fine-tuning policy's frozen groups stay frozen. Warns on
/// stderr when the dataset exceeds `cap`.
PhaseResult fewshot_finetune(Seq2SeqModel& model, std::span<const EncodedPair> train,
                             std::span<const EncodedPair> valid, const TrainConfig& cfg,
                             bool keep_frozen, const FreezePolicy& finetune_policy,
                             std::size_t cap = kFewShotCap, const EvalCallback& on_eval = {});

}  // namespace xlgen
