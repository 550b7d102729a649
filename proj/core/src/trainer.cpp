#include "xlgen/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "xlgen/error.hpp"
#include "xlgen/loss.hpp"
#include "xlgen/optimizer.hpp"

namespace xlgen {

std::vector<std::vector<std::size_t>> make_batches(std::span<const EncodedPair> data,
                                                   const std::vector<std::size_t>& order,
                                                   std::size_t batch_tokens) {
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  std::size_t tokens = 0;
  for (std::size_t idx : order) {
    const auto& ex = data[idx];
    const std::size_t n = ex.source.tokens.size() + ex.target.size();
    if (!current.empty() && tokens + n > batch_tokens) {
      batches.push_back(std::move(current));
      current.clear();
      tokens = 0;
    }
    current.push_back(idx);
    tokens += n;
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

std::vector<std::size_t> mixed_epoch_order(std::size_t n_task, std::size_t n_aug, Rng& rng) {
  std::vector<std::size_t> order(n_task + n_aug);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return order;
}

namespace {

std::vector<EncodedPair> gather(std::span<const EncodedPair> data, const std::vector<std::size_t>& idx) {
  std::vector<EncodedPair> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

std::vector<Matrix> snapshot(const ParameterStore& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

void restore(ParameterStore& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = values[i];
}

}  // namespace

double validation_loss(const Seq2SeqModel& model, std::span<const EncodedPair> data,
                       std::size_t batch_tokens) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& batch : make_batches(data, order, batch_tokens)) {
    const auto examples = gather(data, batch);
    const auto pass = model.forward(examples, {.keep_cache = false});
    const auto loss = loss_label_smoothed(pass.log_probs, pass.targets, 0.0, Vocabulary::kPad);
    total += loss.loss * static_cast<double>(loss.tokens);
    tokens += loss.tokens;
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

PhaseResult train_phase(Seq2SeqModel& model, std::span<const EncodedPair> train,
                        std::span<const EncodedPair> valid, const TrainConfig& cfg,
                        const std::vector<bool>& trainable, const EwcState* ewc,
                        const EvalCallback& on_eval) {
  cfg.validate();
  if (train.empty()) throw DataError("training set is empty");
  const auto start_time = std::chrono::steady_clock::now();
  auto& params = model.parameters();
  if (trainable.size() != params.size()) throw std::invalid_argument("train_phase: mask size mismatch");
  if (ewc) ewc->validate();

  PhaseResult result;
  result.trainable = trainable;
  Adam adam(params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng order_rng(Rng::derive(cfg.seed, 1));
  Rng dropout_rng(Rng::derive(cfg.seed, 2));
  const double smoothing = model.config().label_smoothing;

  std::vector<Matrix> best;
  auto evaluate = [&](std::int64_t step) {
    if (valid.empty()) {
      if (on_eval) on_eval(step, model, 0.0);
      return;
    }
    const double v = validation_loss(model, valid, cfg.batch_tokens);
    result.validation.push_back({step, v});
    if (result.best_step < 0 || v < result.best_valid_loss) {
      result.best_step = step;
      result.best_valid_loss = v;
      best = snapshot(params);
    }
    if (on_eval) on_eval(step, model, v);
  };

  evaluate(0);
  std::int64_t step = 0;
  std::vector<std::vector<std::size_t>> batches;
  std::size_t next_batch = 0;
  while (step < cfg.max_steps) {
    if (next_batch == batches.size()) {
      std::vector<std::size_t> order(train.size());
      std::iota(order.begin(), order.end(), 0);
      order_rng.shuffle(order);
      batches = make_batches(train, order, cfg.batch_tokens);
      next_batch = 0;
    }
    const auto examples = gather(train, batches[next_batch++]);
    ++step;
    const auto sched = lr_and_dropout_at(step, cfg);

    params.zero_grad();
    const auto pass = model.forward(examples, {.dropout = sched.dropout, .rng = &dropout_rng});
    auto loss = loss_label_smoothed(pass.log_probs, pass.targets, smoothing, Vocabulary::kPad, true);
    double total = loss.loss;
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "loss became non-finite at step " << step << " (lr " << sched.lr << ")";
      throw DivergenceError(msg.str());
    }
    model.backward(pass, loss.grad);
    if (ewc) total += ewc_accumulate(params, *ewc, trainable);
    if (cfg.clip_norm > 0.0) clip_grad_norm(params, cfg.clip_norm, trainable);
    adam.step(params, sched.lr, trainable);
    result.log.push_back({step, total, sched.lr, sched.dropout});

    if (step % cfg.eval_interval == 0 || step == cfg.max_steps) evaluate(step);
  }
  result.steps = step;
  if (!best.empty()) restore(params, best);
  params.zero_grad();
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

PhaseResult pretrain_auxiliary(Seq2SeqModel& model, std::span<const EncodedPair> train,
                               std::span<const EncodedPair> valid, const TrainConfig& cfg,
                               const EvalCallback& on_eval) {
  if (train.empty()) throw DataError("auxiliary dataset is empty");
  const std::vector<bool> all(model.parameters().size(), true);
  return train_phase(model, train, valid, cfg, all, nullptr, on_eval);
}

PhaseResult finetune(Seq2SeqModel& model, std::span<const EncodedPair> task,
                     std::span<const EncodedPair> valid, const FreezePolicy& policy,
                     std::span<const EncodedPair> augmentation, const TrainConfig& cfg,
                     const EvalCallback& on_eval) {
  if (task.empty()) throw DataError("task dataset is empty");
  if (policy.kind == FreezeKind::EWC && !policy.ewc) {
    throw std::invalid_argument("finetune: EWC policy without an EwcState");
  }
  const auto trainable = apply_freeze(model, policy);
  std::vector<EncodedPair> stream(task.begin(), task.end());
  stream.insert(stream.end(), augmentation.begin(), augmentation.end());
  const EwcState* ewc = policy.kind == FreezeKind::EWC ? &*policy.ewc : nullptr;
  return train_phase(model, stream, valid, cfg, trainable, ewc, on_eval);
}

PhaseResult fewshot_finetune(Seq2SeqModel& model, std::span<const EncodedPair> train,
                             std::span<const EncodedPair> valid, const TrainConfig& cfg,
                             bool keep_frozen, const FreezePolicy& finetune_policy,
                             std::size_t cap, const EvalCallback& on_eval) {
  if (train.size() > cap) {
    std::cerr << "warning: few-shot dataset has " << train.size() << " examples (cap " << cap
              << ")\n";
  }
  FreezePolicy policy{keep_frozen ? finetune_policy.kind : FreezeKind::NONE,
                      keep_frozen ? finetune_policy.frozen_groups : std::set<std::string>{},
                      std::nullopt, std::nullopt};
  const auto trainable = apply_freeze(model, policy);
  return train_phase(model, train, valid, cfg, trainable, nullptr, on_eval);
}

}  // namespace xlgen
