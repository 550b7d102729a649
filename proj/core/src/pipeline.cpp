#include "xlgen/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pipeline_tables.hpp"
#include "xlgen/beam.hpp"
#include "xlgen/checkpoint.hpp"
#include "xlgen/corpus.hpp"
#include "xlgen/error.hpp"
#include "xlgen/eval/embedder.hpp"
#include "xlgen/records.hpp"
#include "xlgen/trainer.hpp"

namespace xlgen {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

class Log {
 public:
  explicit Log(bool on) : on_(on) {}
  template <typename... Args>
  void operator()(const char* fmt, Args... args) const {
    if (!on_) return;
    std::fprintf(stderr, "[xlgen] ");
    if constexpr (sizeof...(Args) == 0) {
      std::fputs(fmt, stderr);
    } else {
      std::fprintf(stderr, fmt, args...);
    }
    std::fputc('\n', stderr);
  }

 private:
  bool on_;
};

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::string utc_timestamp(const char* format) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, format, &tm);
  return buf;
}

void require_artifact(const fs::path& path, const std::string& stage) {
  if (!fs::is_regular_file(path)) {
    throw DataError(stage + ": missing upstream artifact " + path.string());
  }
}

std::vector<SentenceCorpus> load_corpora(const RunConfig& config) {
  std::vector<SentenceCorpus> out;
  for (const auto& c : config.corpora) out.push_back(load_corpus(c.path, LanguageTag(c.lang)));
  return out;
}

std::vector<EncodedPair> encode_all(const std::vector<TextPair>& pairs, const Vocabulary& vocab,
                                    const std::string& what) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    try {
      out.push_back(encode_pair(p, vocab));
    } catch (const std::invalid_argument& e) {
      throw DataError(what + ": " + e.what());
    }
  }
  return out;
}

std::string task_key(const TaskEntry& t) { return t.name + "." + t.lang; }

// Writes per-eval checkpoints while a phase runs, then the best model,
// the metrics log and a small result file.
class PhaseWriter {
 public:
  PhaseWriter(fs::path dir, const Vocabulary& vocab, std::map<std::string, std::string> metadata,
              const Log& log, std::string label)
      : dir_(std::move(dir)), vocab_(vocab), metadata_(std::move(metadata)), log_(log),
        label_(std::move(label)) {
    fs::remove_all(dir_ / "checkpoints");
    fs::create_directories(dir_ / "checkpoints");
  }

  EvalCallback callback() {
    return [this](std::int64_t step, const Seq2SeqModel& model, double valid_loss) {
      auto meta = metadata_;
      meta["step"] = std::to_string(step);
      save_checkpoint(dir_ / "checkpoints" / ("step_" + std::to_string(step) + ".ckpt"), model, vocab_, meta);
      log_("%s: step %lld valid %.4f", label_.c_str(), static_cast<long long>(step), valid_loss);
    };
  }

  void finish(const PhaseResult& result, const Seq2SeqModel& model) {
    auto meta = metadata_;
    meta["step"] = std::to_string(result.best_step >= 0 ? result.best_step : result.steps);
    save_checkpoint(dir_ / "best.ckpt", model, vocab_, meta);

    std::string lines;
    std::size_t v = 0;
    const auto flush_valid = [&](std::int64_t upto) {
      for (; v < result.validation.size() && result.validation[v].step <= upto; ++v) {
        ordered_json j;
        j["step"] = result.validation[v].step;
        j["valid_loss"] = result.validation[v].loss;
        lines += j.dump() + "\n";
      }
    };
    flush_valid(0);
    for (const auto& r : result.log) {
      ordered_json j;
      j["step"] = r.step;
      j["loss"] = r.loss;
      j["lr"] = r.lr;
      j["dropout"] = r.dropout;
      lines += j.dump() + "\n";
      flush_valid(r.step);
    }
    flush_valid(std::numeric_limits<std::int64_t>::max());
    write_file(dir_ / "metrics.jsonl", lines);

    ordered_json res;
    res["steps"] = result.steps;
    res["best_step"] = result.best_step;
    if (result.best_step >= 0) res["best_valid_loss"] = result.best_valid_loss;
    write_file(dir_ / "result.json", res.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  const Vocabulary& vocab_;
  std::map<std::string, std::string> metadata_;
  const Log& log_;
  std::string label_;
};

void write_frozen_mask(const fs::path& path, const Seq2SeqModel& model, const FreezePolicy& policy,
                       const std::vector<bool>& trainable) {
  ordered_json j;
  j["policy"] = to_string(policy.kind);
  j["frozen_groups"] = policy.frozen_groups;
  j["parameters"] = ordered_json::array();
  const auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ordered_json p;
    p["name"] = params[i].name;
    p["group"] = params[i].group;
    p["trainable"] = static_cast<bool>(trainable[i]);
    j["parameters"].push_back(p);
  }
  write_file(path, j.dump(2) + "\n");
}

struct System {
  std::string name;
  fs::path checkpoint;
  std::optional<std::string> only_task;  // few-shot systems are task specific
};

fs::path fewshot_dir(const fs::path& run, FreezeKind p, const TaskEntry& t, std::size_t n) {
  return run / "fewshot" / to_string(p) / task_key(t) / ("n" + std::to_string(n));
}

std::vector<System> enumerate_systems(const RunConfig& config, const fs::path& run, const std::string& stage) {
  std::vector<System> systems;
  for (FreezeKind p : config.freeze.policies) {
    const fs::path ckpt = run / "finetune" / to_string(p) / "best.ckpt";
    require_artifact(ckpt, stage);
    systems.push_back({to_string(p), ckpt, std::nullopt});
  }
  for (FreezeKind p : config.fewshot_setup.policies) {
    for (const auto& t : config.tasks) {
      if (!t.fewshot_train || !t.test) continue;
      for (std::size_t n : config.fewshot_setup.sizes) {
        const fs::path ckpt = fewshot_dir(run, p, t, n) / "best.ckpt";
        if (!fs::is_regular_file(ckpt)) continue;
        systems.push_back({to_string(p) + "+fs" + std::to_string(n), ckpt, task_key(t)});
      }
    }
  }
  return systems;
}

std::vector<TextPair> read_aux_split(const fs::path& run, const std::string& split, const std::string& stage) {
  const fs::path path = run / "aux" / (split + ".jsonl");
  require_artifact(path, stage);
  return read_jsonl(path);
}

// ---------------------------------------------------------------- stages

void run_pretrain(const RunConfig& config, const fs::path& run, const Log& log, ordered_json& timings) {
  const auto counts = cmd_prepare_aux(config, run / "aux");
  log("aux data: %zu train / %zu valid / %zu test", counts.train, counts.valid, counts.test);

  std::vector<LanguageTag> langs;
  const auto add_lang = [&](const std::string& code) {
    LanguageTag tag(code);
    if (std::find(langs.begin(), langs.end(), tag) == langs.end()) langs.push_back(tag);
  };
  std::vector<std::string> texts;
  for (const auto& c : config.corpora) add_lang(c.lang);
  for (const auto& t : config.tasks) add_lang(t.lang);
  for (const auto& corpus : load_corpora(config)) {
    texts.insert(texts.end(), corpus.sentences().begin(), corpus.sentences().end());
  }
  for (const auto& t : config.tasks) {
    for (const auto* slot : {&t.train, &t.valid, &t.fewshot_train, &t.fewshot_valid}) {
      if (!*slot) continue;
      for (const auto& p : read_jsonl(**slot)) {
        texts.push_back(p.src);
        texts.push_back(p.tgt);
      }
    }
  }
  const Vocabulary vocab = Vocabulary::build(langs, texts);

  ModelConfig mc = config.model;
  if (mc.vocab_size != 0 && static_cast<std::size_t>(mc.vocab_size) != vocab.size()) {
    throw ConfigError("model.vocab_size is " + std::to_string(mc.vocab_size) + " but the data gives " +
                      std::to_string(vocab.size()) + " (leave it 0)");
  }
  mc.vocab_size = static_cast<int>(vocab.size());
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Seq2SeqModel model(mc);
  model.initialize(Rng::derive(config.seed, 0));

  const auto train = encode_all(read_aux_split(run, "train", "pretrain"), vocab, "aux train");
  const auto valid = encode_all(read_aux_split(run, "valid", "pretrain"), vocab, "aux valid");
  log("pretrain: vocabulary %zu, %zu train examples", vocab.size(), train.size());
  PhaseWriter writer(run / "pretrain", vocab, {{"phase", "pretrain"}}, log, "pretrain");
  const auto result = pretrain_auxiliary(model, train, valid, config.phase_config(Stage::Pretrain),
                                         writer.callback());
  writer.finish(result, model);
  timings["pretrain"] = result.seconds;
}

Checkpoint load_finetune_base(const RunConfig& config, const fs::path& run) {
  const fs::path pretrained = run / "pretrain" / "best.ckpt";
  if (fs::is_regular_file(pretrained)) return load_checkpoint(pretrained);
  if (config.init_checkpoint) return load_checkpoint(*config.init_checkpoint);
  throw DataError("finetune: missing upstream artifact " + pretrained.string() +
                  " (run the pretrain stage or set init_checkpoint)");
}

void run_finetune(const RunConfig& config, const fs::path& run, const Log& log, ordered_json& timings) {
  const Checkpoint base = load_finetune_base(config, run);
  const Vocabulary& vocab = base.vocab;
  std::vector<EncodedPair> task, valid;
  for (const auto& t : config.tasks) {
    if (!t.train) continue;
    auto tr = encode_all(read_jsonl(*t.train), vocab, t.train->string());
    task.insert(task.end(), tr.begin(), tr.end());
    if (t.valid) {
      auto va = encode_all(read_jsonl(*t.valid), vocab, t.valid->string());
      valid.insert(valid.end(), va.begin(), va.end());
    }
  }
  std::vector<EncodedPair> augmentation;
  if (config.freeze.augmentation > 0) {
    auto aux = read_aux_split(run, "train", "finetune");
    if (aux.size() < config.freeze.augmentation) {
      throw DataError("finetune: augmentation wants " + std::to_string(config.freeze.augmentation) +
                      " aux examples, only " + std::to_string(aux.size()) + " available");
    }
    aux.resize(config.freeze.augmentation);
    augmentation = encode_all(aux, vocab, "aux train");
  }

  for (FreezeKind kind : config.freeze.policies) {
    Seq2SeqModel model = base.model;
    FreezePolicy policy = make_freeze_policy(kind, model, config.freeze.subset);
    if (kind == FreezeKind::EWC) {
      const auto aux = encode_all(read_aux_split(run, "train", "finetune"), vocab, "aux train");
      log("finetune EWC: Fisher over %zu aux examples", config.freeze.ewc_samples);
      policy.ewc = estimate_fisher(model, aux, config.freeze.ewc_samples, config.freeze.ewc_strength);
    }
    const std::string name = to_string(kind);
    const fs::path dir = run / "finetune" / name;
    std::string frozen;
    for (const auto& g : policy.frozen_groups) frozen += (frozen.empty() ? "" : ",") + g;
    PhaseWriter writer(dir, vocab, {{"phase", "finetune"}, {"policy", name}, {"frozen_groups", frozen}}, log,
                       "finetune " + name);
    const auto result = finetune(model, task, valid, policy, augmentation, config.phase_config(Stage::Finetune),
                                 writer.callback());
    writer.finish(result, model);
    write_frozen_mask(dir / "frozen_mask.json", model, policy, result.trainable);
    timings["finetune/" + name] = result.seconds;
  }
}

void run_fewshot(const RunConfig& config, const fs::path& run, const Log& log, ordered_json& timings) {
  for (FreezeKind kind : config.fewshot_setup.policies) {
    const fs::path base_path = run / "finetune" / to_string(kind) / "best.ckpt";
    require_artifact(base_path, "fewshot");
    const Checkpoint base = load_checkpoint(base_path);
    const FreezePolicy policy = make_freeze_policy(kind, base.model, config.freeze.subset);
    for (const auto& t : config.tasks) {
      if (!t.fewshot_train) continue;
      const auto pool = encode_all(read_jsonl(*t.fewshot_train), base.vocab, t.fewshot_train->string());
      std::vector<EncodedPair> valid;
      if (t.fewshot_valid) valid = encode_all(read_jsonl(*t.fewshot_valid), base.vocab, t.fewshot_valid->string());
      for (std::size_t n : config.fewshot_setup.sizes) {
        if (n > pool.size()) {
          throw DataError("fewshot: " + std::to_string(n) + " examples requested, " + t.fewshot_train->string() +
                          " holds " + std::to_string(pool.size()));
        }
        const std::span<const EncodedPair> subset(pool.data(), n);
        Seq2SeqModel model = base.model;
        const std::string label = to_string(kind) + "+fs" + std::to_string(n) + " " + task_key(t);
        PhaseWriter writer(fewshot_dir(run, kind, t, n), base.vocab,
                           {{"phase", "fewshot"},
                            {"policy", to_string(kind)},
                            {"task", task_key(t)},
                            {"examples", std::to_string(n)},
                            {"keep_frozen", config.fewshot_setup.keep_frozen ? "true" : "false"}},
                           log, "fewshot " + label);
        const auto result = fewshot_finetune(model, subset, valid, config.phase_config(Stage::FewShot),
                                             config.fewshot_setup.keep_frozen, policy, config.fewshot_setup.cap,
                                             writer.callback());
        writer.finish(result, model);
        timings["fewshot/" + label] = result.seconds;
      }
    }
  }
}

fs::path output_path(const fs::path& run, const System& s, const TaskEntry& t) {
  return run / "outputs" / s.name / (task_key(t) + ".txt");
}

bool system_covers(const System& s, const TaskEntry& t) {
  return t.test && (!s.only_task || *s.only_task == task_key(t));
}

void run_generate(const RunConfig& config, const fs::path& run, const Log& log, ordered_json& timings) {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, std::vector<TextPair>> tests;
  for (const auto& t : config.tasks) {
    if (t.test) tests[task_key(t)] = read_jsonl(*t.test);
  }
  for (const auto& system : enumerate_systems(config, run, "generate")) {
    const Checkpoint ckpt = load_checkpoint(system.checkpoint);
    BeamOptions options;
    options.beam_size = config.generate.beam_size;
    options.max_len = config.generate.max_len;
    options.length_penalty = config.generate.length_penalty;
    options.banned = non_generable_tokens(ckpt.vocab);
    for (const auto& t : config.tasks) {
      if (!system_covers(system, t)) continue;
      const auto& records = tests.at(task_key(t));
      const auto encoded = encode_all(records, ckpt.vocab, t.test->string());
      std::vector<std::string> outputs;
      outputs.reserve(encoded.size());
      for (const auto& e : encoded) outputs.push_back(ckpt.vocab.decode(generate(ckpt.model, e.source, options).tokens));
      fs::create_directories(output_path(run, system, t).parent_path());
      write_lines(output_path(run, system, t), outputs);
      log("generate: %s on %s, %zu outputs", system.name.c_str(), task_key(t).c_str(), outputs.size());
    }
  }
  timings["generate"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::unique_ptr<eval::LanguageAttributor> make_attributor(const RunConfig& config) {
  if (config.eval.fidelity == "none") return nullptr;
  if (config.eval.fidelity == "script") return std::make_unique<eval::ScriptAttributor>(config.eval.scripts);

  // Token sets per language from the monolingual and task data; tokens seen
  // in more than one language (punctuation, numbers, loans) stay unattributed.
  std::map<std::string, std::set<std::string>> sets;
  const auto tokenizer_for_lang = [&](const std::string& lang) {
    return config.eval.tokenizer == "auto" ? eval::tokenizer_for(LanguageTag(lang))
                                           : eval::tokenizer_by_id(config.eval.tokenizer);
  };
  std::map<std::string, std::shared_ptr<const eval::EvalTokenizer>> tokenizers;
  const auto add = [&](const std::string& lang, const std::string& text) {
    auto& tok = tokenizers[lang];
    if (!tok) tok = tokenizer_for_lang(lang);
    for (auto& token : tok->tokenize(text)) sets[lang].insert(std::move(token));
  };
  for (const auto& corpus : load_corpora(config)) {
    for (const auto& s : corpus.sentences()) add(corpus.lang().code(), s);
  }
  for (const auto& t : config.tasks) {
    for (const auto* slot : {&t.train, &t.valid, &t.fewshot_train, &t.fewshot_valid}) {
      if (!*slot) continue;
      for (const auto& p : read_jsonl(**slot)) {
        add(p.src_lang, p.src);
        add(p.tgt_lang, p.tgt);
      }
    }
  }
  std::map<std::string, int> owners;
  for (const auto& [lang, tokens] : sets) {
    for (const auto& token : tokens) ++owners[token];
  }
  for (auto& [lang, tokens] : sets) {
    std::erase_if(tokens, [&](const std::string& token) { return owners[token] > 1; });
  }
  return std::make_unique<eval::VocabularyAttributor>(sets);
}

fs::path report_path(const fs::path& run, const System& s, const TaskEntry& t, const char* ext) {
  return run / "reports" / s.name / (task_key(t) + ext);
}

void run_evaluate(const RunConfig& config, const fs::path& run, const Log& log, ordered_json& timings) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto systems = enumerate_systems(config, run, "evaluate");
  const auto attributor = make_attributor(config);
  std::shared_ptr<const eval::EvalTokenizer> fixed_tokenizer;
  if (config.eval.tokenizer != "auto") fixed_tokenizer = eval::tokenizer_by_id(config.eval.tokenizer);

  std::vector<std::pair<std::string, std::vector<eval::EvalReport>>> rows;
  for (const auto& system : systems) {
    std::vector<eval::EvalReport> reports;
    std::unique_ptr<eval::ModelTokenEmbedder> embedder;
    for (const auto& t : config.tasks) {
      if (!system_covers(system, t)) continue;
      const fs::path outputs = output_path(run, system, t);
      require_artifact(outputs, "evaluate");
      std::vector<std::string> refs;
      for (const auto& p : read_jsonl(*t.test)) refs.push_back(p.tgt);

      eval::EvalInputs inputs;
      inputs.task = t.name;
      inputs.lang = t.lang;
      inputs.metrics = config.eval.metrics;
      inputs.tokenizer = fixed_tokenizer.get();
      inputs.attributor = attributor.get();
      const auto metrics = inputs.metrics.empty() ? eval::metrics_for_task(t.name) : inputs.metrics;
      if (metrics.contains(eval::Metric::EMBED)) {
        if (!embedder) {
          const Checkpoint ckpt = load_checkpoint(system.checkpoint);
          embedder = std::make_unique<eval::ModelTokenEmbedder>(ckpt.model, ckpt.vocab);
        }
        inputs.embedder = embedder.get();
      }
      const auto report = eval::evaluate(read_lines(outputs), refs, inputs);
      write_file(report_path(run, system, t, ".json"), report.to_json());
      write_file(report_path(run, system, t, ".txt"), report.to_table());
      log("evaluate: %s on %s", system.name.c_str(), task_key(t).c_str());
      reports.push_back(report);
    }
    rows.emplace_back(system.name, std::move(reports));
  }
  const auto tables = detail::render_tables(rows);
  write_file(run / "summary.txt", tables.text);
  write_file(run / "summary.tsv", tables.tsv);
  timings["evaluate"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

AuxSplitCounts cmd_prepare_aux(const RunConfig& config, const fs::path& dir) {
  if (config.corpora.empty()) throw ConfigError("prepare-aux: no corpora configured");
  const auto corpora = load_corpora(config);
  const auto& aux = config.aux;
  AuxSplitCounts counts;
  ordered_json manifest;
  manifest["seed"] = config.seed;
  manifest["languages"] = ordered_json::array();
  for (const auto& c : corpora) {
    manifest["languages"].push_back({{"lang", c.lang().code()}, {"source", c.source_id()}, {"sentences", c.size()}});
  }
  manifest["len_range"] = {aux.sampling.min_passage, aux.sampling.max_passage};
  manifest["fraction"] = aux.sampling.fraction;
  manifest["partitions"] = aux.partitions;
  std::uint64_t stream = 0;
  for (auto [split, per_lang, slot] :
       {std::tuple{"train", aux.n_per_language, &counts.train}, std::tuple{"valid", aux.valid_per_language, &counts.valid},
        std::tuple{"test", aux.test_per_language, &counts.test}}) {
    const std::uint64_t seed = Rng::derive(Rng::derive(config.seed, 1), stream++);
    const auto examples = generate_aux_dataset(corpora, per_lang, aux.sampling, seed, aux.partitions, aux.parallel);
    std::vector<TextPair> pairs;
    pairs.reserve(examples.size());
    for (const auto& e : examples) pairs.push_back(to_text_pair(e));
    fs::create_directories(dir);
    write_jsonl(dir / (std::string(split) + ".jsonl"), pairs);
    *slot = pairs.size();
    manifest["counts"][split] = pairs.size();
    manifest["per_language"][split] = per_lang;
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return counts;
}

fs::path cmd_pipeline(const RunConfig& config, const std::vector<Stage>& stages, const PipelineOptions& options) {
  if (stages.empty()) throw ConfigError("pipeline: no stages given");
  config.validate_for(stages);
  const Log log(options.verbose);

  fs::path run;
  if (options.run_dir) {
    run = *options.run_dir;
  } else {
    const std::string stem = config.hash() + "-" + utc_timestamp("%Y%m%dT%H%M%SZ");
    run = options.out_root / stem;
    for (int i = 1; fs::exists(run); ++i) run = options.out_root / (stem + "-" + std::to_string(i));
  }
  fs::create_directories(run);
  write_file(run / "config.json", config.to_json());
  log("run directory %s", run.string().c_str());

  ordered_json manifest;
  const fs::path manifest_path = run / "manifest.json";
  if (fs::is_regular_file(manifest_path)) {
    std::ifstream in(manifest_path);
    manifest = ordered_json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) manifest = ordered_json::object();
  }
  manifest["config_hash"] = config.hash();
  manifest["seed"] = config.seed;
  ordered_json invocation;
  invocation["started_at"] = utc_timestamp("%Y-%m-%dT%H:%M:%SZ");
  invocation["stages"] = ordered_json::array();
  for (Stage s : stages) invocation["stages"].push_back(to_string(s));
  ordered_json timings = ordered_json::object();

  const auto record = [&](const std::string& status) {
    invocation["finished_at"] = utc_timestamp("%Y-%m-%dT%H:%M:%SZ");
    invocation["seconds"] = timings;
    invocation["status"] = status;
    manifest["invocations"].push_back(invocation);
    write_file(manifest_path, manifest.dump(2) + "\n");
  };
  try {
    for (Stage s : stages) {
      log("stage %s", to_string(s).c_str());
      switch (s) {
        case Stage::Pretrain: run_pretrain(config, run, log, timings); break;
        case Stage::Finetune: run_finetune(config, run, log, timings); break;
        case Stage::FewShot: run_fewshot(config, run, log, timings); break;
        case Stage::Generate: run_generate(config, run, log, timings); break;
        case Stage::Evaluate: run_evaluate(config, run, log, timings); break;
      }
    }
  } catch (const std::exception& e) {
    record(std::string("failed: ") + e.what());
    throw;
  }
  record("ok");
  return run;
}

}  // namespace xlgen
