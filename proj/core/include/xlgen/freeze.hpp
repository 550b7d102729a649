#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xlgen/ewc.hpp"
#include "xlgen/model.hpp"

namespace xlgen {

enum class FreezeKind { NONE, WE, WE_ENC, WE_DEC, WE_SUBSET, EWC };

std::string to_string(FreezeKind kind);
/// Accepts the enum spelling, case-insensitive. Throws ConfigError.
FreezeKind parse_freeze_kind(std::string_view name);
const std::vector<FreezeKind>& all_freeze_kinds();

/// Layer indices frozen by WE_SUBSET in each stack.
struct SubsetSpec {
  std::vector<int> encoder_layers;
  std::vector<int> decoder_layers;
};

struct FreezePolicy {
  FreezeKind kind = FreezeKind::NONE;
  std::set<std::string> frozen_groups;
  std::optional<SubsetSpec> subset;
  std::optional<EwcState> ewc;
};

/// Resolves a policy against a model's groups:
///   NONE, EWC  -> nothing frozen
///   WE         -> word_embeddings (+ output_projection when untied)
///   WE_ENC     -> WE + every encoder.* group
///   WE_DEC     -> WE + every decoder.* group
///   WE_SUBSET  -> WE + the listed layers; default is the bottom half of
///                 each stack (at least one layer)
/// Positions and stack-level norms count as part of their stack.
FreezePolicy make_freeze_policy(FreezeKind kind, const Seq2SeqModel& model,
                                std::optional<SubsetSpec> subset = std::nullopt);

/// Per-parameter trainable flags (true = updated). Throws
/// std::invalid_argument if a frozen group does not exist in the model.
std::vector<bool> apply_freeze(const Seq2SeqModel& model, const FreezePolicy& policy);

}  // namespace xlgen
