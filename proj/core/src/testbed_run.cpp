#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "xlgen/error.hpp"
#include "xlgen/pipeline.hpp"

namespace xlgen {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json phase(double lr, std::int64_t warmup, std::int64_t steps, std::int64_t eval_interval, double scale) {
  const auto scaled = [&](std::int64_t v) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(static_cast<double>(v) * scale)));
  };
  ordered_json j;
  j["lr"] = lr;
  j["warmup_steps"] = scaled(warmup);
  j["max_steps"] = scaled(steps);
  j["eval_interval"] = scaled(eval_interval);
  return j;
}

}  // namespace

fs::path write_testbed_run(const TestbedConfig& testbed, const fs::path& dir, const TestbedRunOptions& options) {
  if (testbed.languages.size() < 2) throw ConfigError("testbed: needs at least two languages");
  if (!(options.step_scale > 0.0)) throw ConfigError("testbed: step_scale must be > 0");
  if (testbed.hrl != testbed.languages.front()) {
    throw ConfigError("testbed: the supervised language must come first");
  }
  write_testbed(make_testbed(testbed), dir);

  ordered_json j;
  j["seed"] = testbed.seed;
  j["corpora"] = ordered_json::array();
  for (const auto& lang : testbed.languages) {
    j["corpora"].push_back({{"path", "corpora/" + lang + ".txt"}, {"lang", lang}});
  }
  j["aux"] = {{"n_per_language", 1400}, {"valid_per_language", 100}, {"test_per_language", 100},
              {"len_range", {3, 6}},    {"fraction", 0.2}};
  j["model"] = {{"n_layers", 2}, {"n_heads", 4}, {"d_model", 64}, {"ffn_dim", 256}, {"dropout", 0.1}};
  ordered_json train;
  train["dropout_schedule"] = {{0, 0.1}};
  train["batch_tokens"] = 1024;
  train["pretrain"] = phase(1e-3, 200, 1500, 250, options.step_scale);
  train["finetune"] = phase(5e-4, 100, 800, 250, options.step_scale);
  train["fewshot"] = phase(5e-4, 30, 300, 100, options.step_scale);
  j["train"] = train;
  j["freeze"]["policies"] = ordered_json::array();
  for (FreezeKind k : options.policies) j["freeze"]["policies"].push_back(to_string(k));
  j["freeze"]["ewc_lambda"] = 1.0;
  j["freeze"]["fisher_samples"] = 200;
  j["fewshot"]["sizes"] = options.fewshot_sizes;
  j["fewshot"]["policies"] = ordered_json::array();
  for (FreezeKind k : options.fewshot_policies) j["fewshot"]["policies"].push_back(to_string(k));
  j["generate"] = {{"beam_size", 5}, {"max_len", 24}};
  j["tasks"] = ordered_json::array();
  for (const auto& lang : testbed.languages) {
    const std::string base = "tasks/FSE/" + lang + "/";
    ordered_json t;
    t["name"] = "FSE";
    t["lang"] = lang;
    if (lang == testbed.hrl) {
      t["train"] = base + "train.jsonl";
      t["valid"] = base + "valid.jsonl";
    } else {
      t["fewshot_train"] = base + "train.jsonl";
      t["fewshot_valid"] = base + "valid.jsonl";
    }
    t["test"] = base + "test.jsonl";
    j["tasks"].push_back(t);
  }
  j["eval"] = {{"tokenizer", "default"}, {"fidelity", "vocabulary"}};

  const fs::path path = dir / "config.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write " + path.string());
  return path;
}

}  // namespace xlgen
