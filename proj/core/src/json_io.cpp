#include "json_io.hpp"

#include <algorithm>

#include "xlgen/error.hpp"

namespace xlgen::json_io {

ordered_json to_json(const ModelConfig& cfg) {
  ordered_json j;
  j["n_layers"] = cfg.n_layers;
  j["n_heads"] = cfg.n_heads;
  j["d_model"] = cfg.d_model;
  j["ffn_dim"] = cfg.ffn_dim;
  j["vocab_size"] = cfg.vocab_size;
  j["max_positions"] = cfg.max_positions;
  j["dropout"] = cfg.dropout;
  j["label_smoothing"] = cfg.label_smoothing;
  j["extra_layer_norm"] = cfg.extra_layer_norm;
  j["tie_output_projection"] = cfg.tie_output_projection;
  j["init_std"] = cfg.init_std;
  return j;
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(context + ": unknown key '" + key + "'");
    }
  }
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base) {
  reject_unknown_keys(j,
                      {"n_layers", "n_heads", "d_model", "ffn_dim", "vocab_size", "max_positions",
                       "dropout", "label_smoothing", "extra_layer_norm", "tie_output_projection",
                       "init_std"},
                      "model");
  try {
    base.n_layers = j.value("n_layers", base.n_layers);
    base.n_heads = j.value("n_heads", base.n_heads);
    base.d_model = j.value("d_model", base.d_model);
    base.ffn_dim = j.value("ffn_dim", base.ffn_dim);
    base.vocab_size = j.value("vocab_size", base.vocab_size);
    base.max_positions = j.value("max_positions", base.max_positions);
    base.dropout = j.value("dropout", base.dropout);
    base.label_smoothing = j.value("label_smoothing", base.label_smoothing);
    base.extra_layer_norm = j.value("extra_layer_norm", base.extra_layer_norm);
    base.tie_output_projection = j.value("tie_output_projection", base.tie_output_projection);
    base.init_std = j.value("init_std", base.init_std);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return base;
}

}  // namespace xlgen::json_io
