#include "xlgen/freeze.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "xlgen/error.hpp"

namespace xlgen {

std::string to_string(FreezeKind kind) {
  switch (kind) {
    case FreezeKind::NONE: return "NONE";
    case FreezeKind::WE: return "WE";
    case FreezeKind::WE_ENC: return "WE_ENC";
    case FreezeKind::WE_DEC: return "WE_DEC";
    case FreezeKind::WE_SUBSET: return "WE_SUBSET";
    case FreezeKind::EWC: return "EWC";
  }
  return "?";
}

const std::vector<FreezeKind>& all_freeze_kinds() {
  static const std::vector<FreezeKind> kinds{FreezeKind::NONE,   FreezeKind::WE,
                                             FreezeKind::WE_ENC, FreezeKind::WE_DEC,
                                             FreezeKind::WE_SUBSET, FreezeKind::EWC};
  return kinds;
}

FreezeKind parse_freeze_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (FreezeKind k : all_freeze_kinds()) {
    if (to_string(k) == upper) return k;
  }
  throw ConfigError("unknown freeze policy '" + std::string(name) + "'");
}

namespace {

std::vector<int> bottom_half(int n_layers) {
  std::vector<int> out;
  for (int i = 0; i < std::max(1, n_layers / 2); ++i) out.push_back(i);
  return out;
}

}  // namespace

FreezePolicy make_freeze_policy(FreezeKind kind, const Seq2SeqModel& model,
                                std::optional<SubsetSpec> subset) {
  FreezePolicy policy{kind, {}, std::nullopt, std::nullopt};
  if (kind == FreezeKind::NONE || kind == FreezeKind::EWC) return policy;

  const auto groups = model.groups();
  auto has = [&](const std::string& g) { return std::find(groups.begin(), groups.end(), g) != groups.end(); };
  policy.frozen_groups.insert("word_embeddings");
  if (has("output_projection")) policy.frozen_groups.insert("output_projection");

  auto freeze_stack = [&](const std::string& prefix) {
    for (const auto& g : groups) {
      if (g.starts_with(prefix)) policy.frozen_groups.insert(g);
    }
  };
  if (kind == FreezeKind::WE_ENC) freeze_stack("encoder.");
  if (kind == FreezeKind::WE_DEC) freeze_stack("decoder.");
  if (kind == FreezeKind::WE_SUBSET) {
    const int n = model.config().n_layers;
    SubsetSpec spec = subset.value_or(SubsetSpec{bottom_half(n), bottom_half(n)});
    for (int i : spec.encoder_layers) policy.frozen_groups.insert("encoder.layers." + std::to_string(i));
    for (int i : spec.decoder_layers) policy.frozen_groups.insert("decoder.layers." + std::to_string(i));
    policy.subset = std::move(spec);
  }
  return policy;
}

std::vector<bool> apply_freeze(const Seq2SeqModel& model, const FreezePolicy& policy) {
  const auto groups = model.groups();
  for (const auto& g : policy.frozen_groups) {
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) {
      throw std::invalid_argument("apply_freeze: unknown parameter group '" + g + "'");
    }
  }
  std::vector<bool> trainable;
  trainable.reserve(model.parameters().size());
  for (const auto& p : model.parameters()) trainable.push_back(!policy.frozen_groups.contains(p.group));
  return trainable;
}

}  // namespace xlgen
