#include "xlgen/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "xlgen/error.hpp"
#include "xlgen/language.hpp"
#include "xlgen/rng.hpp"

namespace xlgen {

namespace fs = std::filesystem;
using nlohmann::json;
using json_io::ordered_json;
using json_io::reject_unknown_keys;

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Pretrain: return "pretrain";
    case Stage::Finetune: return "finetune";
    case Stage::FewShot: return "fewshot";
    case Stage::Generate: return "generate";
    case Stage::Evaluate: return "evaluate";
  }
  return "?";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::Pretrain, Stage::Finetune, Stage::FewShot,
                                         Stage::Generate, Stage::Evaluate};
  return stages;
}

std::vector<Stage> parse_stages(std::string_view list) {
  std::set<Stage> chosen;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string name(list.substr(pos, comma - pos));
    name.erase(std::remove(name.begin(), name.end(), ' '), name.end());
    pos = comma + 1;
    if (name.empty()) continue;
    if (name == "all") {
      chosen.insert(all_stages().begin(), all_stages().end());
      continue;
    }
    const auto it = std::find_if(all_stages().begin(), all_stages().end(),
                                 [&](Stage s) { return to_string(s) == name; });
    if (it == all_stages().end()) throw ConfigError("unknown stage '" + name + "'");
    chosen.insert(*it);
  }
  if (chosen.empty()) throw ConfigError("no stages given");
  return {chosen.begin(), chosen.end()};  // enum order is pipeline order
}

namespace {

template <typename T>
T get(const json& j, const char* key, T fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(context + "." + key + ": wrong type");
  }
}

fs::path resolve(const json& value, const fs::path& base, const std::string& context) {
  if (!value.is_string()) throw ConfigError(context + ": expected a path string");
  fs::path p(value.get<std::string>());
  if (p.empty()) throw ConfigError(context + ": empty path");
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

std::string check_lang(const json& j, const std::string& context) {
  if (!j.is_string() || !is_valid_language_code(j.get<std::string>())) {
    throw ConfigError(context + ": invalid language code");
  }
  return j.get<std::string>();
}

const std::initializer_list<const char*> kTrainKeys{
    "lr", "warmup_steps", "max_steps", "adam_beta1", "adam_beta2", "adam_eps", "clip_norm",
    "dropout_schedule", "batch_tokens", "eval_interval"};

// Applies the TrainConfig keys present in `j` (other keys are the caller's).
void apply_train_keys(const json& j, TrainConfig& cfg, const std::string& context) {
  cfg.lr = get(j, "lr", cfg.lr, context);
  cfg.warmup_steps = get(j, "warmup_steps", cfg.warmup_steps, context);
  cfg.max_steps = get(j, "max_steps", cfg.max_steps, context);
  cfg.adam_beta1 = get(j, "adam_beta1", cfg.adam_beta1, context);
  cfg.adam_beta2 = get(j, "adam_beta2", cfg.adam_beta2, context);
  cfg.adam_eps = get(j, "adam_eps", cfg.adam_eps, context);
  cfg.clip_norm = get(j, "clip_norm", cfg.clip_norm, context);
  cfg.batch_tokens = get(j, "batch_tokens", cfg.batch_tokens, context);
  cfg.eval_interval = get(j, "eval_interval", cfg.eval_interval, context);
  if (j.contains("dropout_schedule")) {
    const auto& ds = j.at("dropout_schedule");
    if (!ds.is_array()) throw ConfigError(context + ".dropout_schedule: expected [[step, p], ...]");
    cfg.dropout_schedule.clear();
    for (const auto& m : ds) {
      if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number()) {
        throw ConfigError(context + ".dropout_schedule: expected [[step, p], ...]");
      }
      cfg.dropout_schedule.push_back({m[0].get<std::int64_t>(), m[1].get<double>()});
    }
  }
}

ordered_json train_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["lr"] = cfg.lr;
  j["warmup_steps"] = cfg.warmup_steps;
  j["max_steps"] = cfg.max_steps;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["clip_norm"] = cfg.clip_norm;
  j["dropout_schedule"] = ordered_json::array();
  for (const auto& m : cfg.dropout_schedule) {
    j["dropout_schedule"].push_back({m.step, m.dropout});
  }
  j["batch_tokens"] = cfg.batch_tokens;
  j["eval_interval"] = cfg.eval_interval;
  return j;
}

std::vector<FreezeKind> parse_policies(const json& j, const std::string& context) {
  std::vector<FreezeKind> out;
  if (j.is_string()) {
    out.push_back(parse_freeze_kind(j.get<std::string>()));
  } else if (j.is_array()) {
    for (const auto& p : j) {
      if (!p.is_string()) throw ConfigError(context + ": policy names must be strings");
      const FreezeKind k = parse_freeze_kind(p.get<std::string>());
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
  } else {
    throw ConfigError(context + ": expected a policy name or a list of names");
  }
  return out;
}

std::vector<int> parse_layers(const json& j, const std::string& context) {
  if (!j.is_array()) throw ConfigError(context + ": expected a list of layer indices");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() < 0) throw ConfigError(context + ": bad layer index");
    out.push_back(v.get<int>());
  }
  return out;
}

void parse_freeze(const json& j, FreezeSection& f) {
  reject_unknown_keys(j, {"policy", "policies", "subset", "ewc_lambda", "fisher_samples", "augmentation"},
                      "freeze");
  if (j.contains("policy") && j.contains("policies")) {
    throw ConfigError("freeze: give either 'policy' or 'policies'");
  }
  if (j.contains("policy")) f.policies = parse_policies(j.at("policy"), "freeze.policy");
  if (j.contains("policies")) f.policies = parse_policies(j.at("policies"), "freeze.policies");
  if (j.contains("subset")) {
    const auto& s = j.at("subset");
    reject_unknown_keys(s, {"encoder_layers", "decoder_layers"}, "freeze.subset");
    SubsetSpec spec;
    if (s.contains("encoder_layers")) spec.encoder_layers = parse_layers(s.at("encoder_layers"), "freeze.subset");
    if (s.contains("decoder_layers")) spec.decoder_layers = parse_layers(s.at("decoder_layers"), "freeze.subset");
    f.subset = spec;
  }
  f.ewc_strength = get(j, "ewc_lambda", f.ewc_strength, "freeze");
  f.ewc_samples = get(j, "fisher_samples", f.ewc_samples, "freeze");
  f.augmentation = get(j, "augmentation", f.augmentation, "freeze");
  if (!(f.ewc_strength >= 0.0)) throw ConfigError("freeze.ewc_lambda must be >= 0");
  if (f.ewc_samples == 0) throw ConfigError("freeze.fisher_samples must be > 0");
}

}  // namespace

RunConfig RunConfig::parse(const std::string& json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  reject_unknown_keys(root,
                      {"seed", "corpora", "aux", "model", "train", "freeze", "fewshot", "generate",
                       "tasks", "eval", "init_checkpoint"},
                      "config");
  const fs::path base = fs::absolute(base_dir);
  RunConfig cfg;
  cfg.seed = get<std::uint64_t>(root, "seed", cfg.seed, "config");

  if (root.contains("corpora")) {
    const auto& list = root.at("corpora");
    if (!list.is_array()) throw ConfigError("corpora: expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string ctx = "corpora[" + std::to_string(i) + "]";
      reject_unknown_keys(list[i], {"path", "lang"}, ctx);
      if (!list[i].contains("path") || !list[i].contains("lang")) throw ConfigError(ctx + ": needs path and lang");
      cfg.corpora.push_back({resolve(list[i].at("path"), base, ctx + ".path"),
                             check_lang(list[i].at("lang"), ctx + ".lang")});
    }
  }

  if (root.contains("aux")) {
    const auto& a = root.at("aux");
    reject_unknown_keys(a,
                        {"n_per_language", "valid_per_language", "test_per_language", "len_range",
                         "fraction", "partitions", "parallel"},
                        "aux");
    auto& s = cfg.aux;
    s.n_per_language = get(a, "n_per_language", s.n_per_language, "aux");
    s.valid_per_language = get(a, "valid_per_language", s.valid_per_language, "aux");
    s.test_per_language = get(a, "test_per_language", s.test_per_language, "aux");
    s.sampling.fraction = get(a, "fraction", s.sampling.fraction, "aux");
    s.partitions = get(a, "partitions", s.partitions, "aux");
    s.parallel = get(a, "parallel", s.parallel, "aux");
    if (a.contains("len_range")) {
      const auto r = get<std::vector<std::size_t>>(a, "len_range", {}, "aux");
      if (r.size() != 2) throw ConfigError("aux.len_range: expected [min, max]");
      s.sampling.min_passage = r[0];
      s.sampling.max_passage = r[1];
    }
    try {
      s.sampling.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("aux: ") + e.what());
    }
    if (s.partitions == 0) throw ConfigError("aux.partitions must be > 0");
  }

  if (root.contains("model")) cfg.model = json_io::model_config_from_json(root.at("model"));

  if (root.contains("train")) {
    const auto& t = root.at("train");
    std::vector<const char*> keys(kTrainKeys);
    keys.insert(keys.end(), {"pretrain", "finetune", "fewshot"});
    if (!t.is_object()) throw ConfigError("train: expected an object");
    for (const auto& [key, _] : t.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        throw ConfigError("train: unknown key '" + key + "'");
      }
    }
    TrainConfig common;
    apply_train_keys(t, common, "train");
    cfg.pretrain = cfg.finetune = cfg.fewshot = common;
    for (auto [name, target] : {std::pair{"pretrain", &cfg.pretrain}, std::pair{"finetune", &cfg.finetune},
                                std::pair{"fewshot", &cfg.fewshot}}) {
      if (!t.contains(name)) continue;
      reject_unknown_keys(t.at(name), kTrainKeys, std::string("train.") + name);
      apply_train_keys(t.at(name), *target, std::string("train.") + name);
    }
  }
  for (const TrainConfig* t : {&cfg.pretrain, &cfg.finetune, &cfg.fewshot}) t->validate();

  if (root.contains("freeze")) parse_freeze(root.at("freeze"), cfg.freeze);
  if (cfg.freeze.policies.empty()) throw ConfigError("freeze: no policy given");

  if (root.contains("fewshot")) {
    const auto& f = root.at("fewshot");
    reject_unknown_keys(f, {"sizes", "policies", "keep_frozen", "cap"}, "fewshot");
    auto& s = cfg.fewshot_setup;
    s.sizes = get(f, "sizes", s.sizes, "fewshot");
    if (f.contains("policies")) s.policies = parse_policies(f.at("policies"), "fewshot.policies");
    s.keep_frozen = get(f, "keep_frozen", s.keep_frozen, "fewshot");
    s.cap = get(f, "cap", s.cap, "fewshot");
    std::sort(s.sizes.begin(), s.sizes.end());
    s.sizes.erase(std::unique(s.sizes.begin(), s.sizes.end()), s.sizes.end());
    if (!s.sizes.empty() && s.sizes.front() == 0) {
      throw ConfigError("fewshot.sizes: 0 is the fine-tuned system itself; list positive sizes");
    }
  }

  if (root.contains("generate")) {
    const auto& g = root.at("generate");
    reject_unknown_keys(g, {"beam_size", "max_len", "length_penalty"}, "generate");
    auto& s = cfg.generate;
    s.beam_size = get(g, "beam_size", s.beam_size, "generate");
    s.max_len = get(g, "max_len", s.max_len, "generate");
    s.length_penalty = get(g, "length_penalty", s.length_penalty, "generate");
    if (s.beam_size == 0 || s.max_len == 0) throw ConfigError("generate: beam_size and max_len must be > 0");
  }

  if (root.contains("tasks")) {
    const auto& list = root.at("tasks");
    if (!list.is_array()) throw ConfigError("tasks: expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string ctx = "tasks[" + std::to_string(i) + "]";
      const auto& t = list[i];
      reject_unknown_keys(t, {"name", "lang", "train", "valid", "test", "fewshot_train", "fewshot_valid"}, ctx);
      if (!t.contains("name") || !t.at("name").is_string() || t.at("name").get<std::string>().empty()) {
        throw ConfigError(ctx + ": needs a name");
      }
      if (!t.contains("lang")) throw ConfigError(ctx + ": needs a lang");
      TaskEntry e{t.at("name").get<std::string>(), check_lang(t.at("lang"), ctx + ".lang"), {}, {}, {}, {}, {}};
      if (e.name.find_first_of("/\\. \t") != std::string::npos) {
        throw ConfigError(ctx + ".name: must not contain '/', '.' or spaces");
      }
      for (auto [key, slot] : {std::pair{"train", &e.train}, std::pair{"valid", &e.valid},
                               std::pair{"test", &e.test}, std::pair{"fewshot_train", &e.fewshot_train},
                               std::pair{"fewshot_valid", &e.fewshot_valid}}) {
        if (t.contains(key)) *slot = resolve(t.at(key), base, ctx + "." + key);
      }
      if (!e.train && !e.test && !e.fewshot_train) {
        throw ConfigError(ctx + ": needs at least one of train, test, fewshot_train");
      }
      for (const auto& other : cfg.tasks) {
        if (other.name == e.name && other.lang == e.lang) {
          throw ConfigError(ctx + ": duplicate task " + e.name + "." + e.lang);
        }
      }
      cfg.tasks.push_back(std::move(e));
    }
  }

  if (root.contains("eval")) {
    const auto& e = root.at("eval");
    reject_unknown_keys(e, {"metrics", "tokenizer", "fidelity", "scripts"}, "eval");
    auto& s = cfg.eval;
    for (const auto& m : get<std::vector<std::string>>(e, "metrics", {}, "eval")) {
      s.metrics.insert(eval::parse_metric(m));
    }
    s.tokenizer = get(e, "tokenizer", s.tokenizer, "eval");
    if (s.tokenizer == "default") s.tokenizer = "default-unicode-v1";
    if (s.tokenizer != "auto" && s.tokenizer != "default-unicode-v1" && s.tokenizer != "whitespace") {
      throw ConfigError("eval.tokenizer: unknown id '" + s.tokenizer + "'");
    }
    s.fidelity = get(e, "fidelity", s.fidelity, "eval");
    if (s.fidelity != "vocabulary" && s.fidelity != "script" && s.fidelity != "none") {
      throw ConfigError("eval.fidelity: expected vocabulary, script or none");
    }
    if (e.contains("scripts")) {
      const auto& sc = e.at("scripts");
      if (!sc.is_object()) throw ConfigError("eval.scripts: expected {lang: [[lo, hi], ...]}");
      for (const auto& [lang, ranges] : sc.items()) {
        check_lang(json(lang), "eval.scripts");
        if (!ranges.is_array()) throw ConfigError("eval.scripts." + lang + ": expected a list of ranges");
        for (const auto& r : ranges) {
          if (!r.is_array() || r.size() != 2 || !r[0].is_number_unsigned() || !r[1].is_number_unsigned() ||
              r[0].get<std::uint32_t>() > r[1].get<std::uint32_t>()) {
            throw ConfigError("eval.scripts." + lang + ": ranges are [lo, hi] code points");
          }
          s.scripts[lang].emplace_back(r[0].get<std::uint32_t>(), r[1].get<std::uint32_t>());
        }
      }
    }
    if (s.fidelity == "script" && s.scripts.empty()) {
      throw ConfigError("eval.fidelity=script needs eval.scripts");
    }
  }

  if (root.contains("init_checkpoint")) {
    cfg.init_checkpoint = resolve(root.at("init_checkpoint"), base, "init_checkpoint");
  }
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), fs::absolute(path).parent_path());
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["corpora"] = ordered_json::array();
  for (const auto& c : corpora) j["corpora"].push_back({{"path", c.path.string()}, {"lang", c.lang}});
  j["aux"] = {{"n_per_language", aux.n_per_language},
              {"valid_per_language", aux.valid_per_language},
              {"test_per_language", aux.test_per_language},
              {"len_range", {aux.sampling.min_passage, aux.sampling.max_passage}},
              {"fraction", aux.sampling.fraction},
              {"partitions", aux.partitions},
              {"parallel", aux.parallel}};
  j["model"] = json_io::to_json(model);
  j["train"] = {{"pretrain", train_to_json(pretrain)},
                {"finetune", train_to_json(finetune)},
                {"fewshot", train_to_json(fewshot)}};
  ordered_json fr;
  fr["policies"] = ordered_json::array();
  for (FreezeKind k : freeze.policies) fr["policies"].push_back(xlgen::to_string(k));
  if (freeze.subset) {
    fr["subset"] = {{"encoder_layers", freeze.subset->encoder_layers},
                    {"decoder_layers", freeze.subset->decoder_layers}};
  }
  fr["ewc_lambda"] = freeze.ewc_strength;
  fr["fisher_samples"] = freeze.ewc_samples;
  fr["augmentation"] = freeze.augmentation;
  j["freeze"] = fr;
  ordered_json fsj;
  fsj["sizes"] = fewshot_setup.sizes;
  fsj["policies"] = ordered_json::array();
  for (FreezeKind k : fewshot_setup.policies) fsj["policies"].push_back(xlgen::to_string(k));
  fsj["keep_frozen"] = fewshot_setup.keep_frozen;
  fsj["cap"] = fewshot_setup.cap;
  j["fewshot"] = fsj;
  j["generate"] = {{"beam_size", generate.beam_size},
                   {"max_len", generate.max_len},
                   {"length_penalty", generate.length_penalty}};
  j["tasks"] = ordered_json::array();
  for (const auto& t : tasks) {
    ordered_json tj;
    tj["name"] = t.name;
    tj["lang"] = t.lang;
    for (auto [key, slot] : {std::pair{"train", &t.train}, std::pair{"valid", &t.valid},
                             std::pair{"test", &t.test}, std::pair{"fewshot_train", &t.fewshot_train},
                             std::pair{"fewshot_valid", &t.fewshot_valid}}) {
      if (*slot) tj[key] = slot->value().string();
    }
    j["tasks"].push_back(tj);
  }
  ordered_json ej;
  ej["metrics"] = ordered_json::array();
  for (auto m : eval.metrics) ej["metrics"].push_back(eval::to_string(m));
  ej["tokenizer"] = eval.tokenizer;
  ej["fidelity"] = eval.fidelity;
  ej["scripts"] = ordered_json::object();
  for (const auto& [lang, ranges] : eval.scripts) {
    for (const auto& [lo, hi] : ranges) {
      ej["scripts"][lang].push_back({static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)});
    }
  }
  j["eval"] = ej;
  if (init_checkpoint) j["init_checkpoint"] = init_checkpoint->string();
  return j.dump(2) + "\n";
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stable_hash(to_json())));
  return buf;
}

TrainConfig RunConfig::phase_config(Stage stage) const {
  TrainConfig cfg;
  switch (stage) {
    case Stage::Pretrain: cfg = pretrain; break;
    case Stage::Finetune: cfg = finetune; break;
    case Stage::FewShot: cfg = fewshot; break;
    default: throw std::invalid_argument("phase_config: not a training stage");
  }
  cfg.seed = Rng::derive(seed, 10 + static_cast<std::uint64_t>(stage));
  return cfg;
}

void RunConfig::validate_for(const std::vector<Stage>& stages) const {
  const auto has = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  const auto any_task = [&](auto member) {
    return std::any_of(tasks.begin(), tasks.end(), [&](const TaskEntry& t) { return (t.*member).has_value(); });
  };
  if (has(Stage::Pretrain) && corpora.empty()) {
    throw ConfigError("stage pretrain: no corpora configured");
  }
  if (has(Stage::Finetune) && !any_task(&TaskEntry::train)) {
    throw ConfigError("stage finetune: no task has a train split");
  }
  if (has(Stage::Finetune) && (freeze.augmentation > 0 ||
                               std::count(freeze.policies.begin(), freeze.policies.end(), FreezeKind::EWC)) &&
      corpora.empty()) {
    throw ConfigError("stage finetune: augmentation and EWC need auxiliary data, but no corpora are configured");
  }
  if (has(Stage::FewShot)) {
    if (fewshot_setup.sizes.empty()) throw ConfigError("stage fewshot: fewshot.sizes is empty");
    if (fewshot_setup.policies.empty()) throw ConfigError("stage fewshot: fewshot.policies is empty");
    if (!any_task(&TaskEntry::fewshot_train)) throw ConfigError("stage fewshot: no task has a fewshot_train split");
  }
  if ((has(Stage::Generate) || has(Stage::Evaluate)) && !any_task(&TaskEntry::test)) {
    throw ConfigError("stage " + std::string(has(Stage::Generate) ? "generate" : "evaluate") +
                      ": no task has a test split");
  }
  if (has(Stage::Evaluate) && eval.fidelity == "script") {
    for (const auto& t : tasks) {
      if (t.test && !eval.scripts.contains(t.lang)) {
        throw ConfigError("eval.scripts: no ranges for test language " + t.lang);
      }
    }
  }

  const auto require = [](const fs::path& p) {
    if (!fs::is_regular_file(p)) throw DataError("missing file: " + p.string());
  };
  for (const auto& c : corpora) require(c.path);
  for (const auto& t : tasks) {
    for (const auto* slot : {&t.train, &t.valid, &t.test, &t.fewshot_train, &t.fewshot_valid}) {
      if (*slot) require(**slot);
    }
  }
  if (init_checkpoint) require(*init_checkpoint);
}

}  // namespace xlgen
