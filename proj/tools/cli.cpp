#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "xlgen/checkpoint.hpp"
#include "xlgen/error.hpp"
#include "xlgen/eval/embedder.hpp"
#include "xlgen/eval/report.hpp"
#include "xlgen/pipeline.hpp"
#include "xlgen/records.hpp"

namespace xlgen::cli {

namespace fs = std::filesystem;

namespace {

fs::path default_out_root() {
  const char* env = std::getenv("XLGEN_OUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    if (comma > pos) out.push_back(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string policy;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg = RunConfig::load(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.policy.empty()) {
    std::vector<FreezeKind> kinds;
    for (const auto& p : split_list(c.policy)) kinds.push_back(parse_freeze_kind(p));
    cfg.freeze.policies = kinds;
    cfg.fewshot_setup.policies = kinds;
  }
  return cfg;
}

std::vector<std::string> read_references(const fs::path& path) {
  if (path.extension() == ".jsonl") {
    std::vector<std::string> refs;
    for (const auto& p : read_jsonl(path)) refs.push_back(p.tgt);
    return refs;
  }
  return read_lines(path);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Zero/few-shot cross-lingual generation pipeline"};
  app.name(args.empty() ? "xlgen" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");

  Common common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override the config seed");
  };

  auto* prep = app.add_subcommand("prepare-aux", "Sample the auxiliary passage/summary splits");
  add_common(prep);
  std::string prep_out;
  prep->add_option("-o,--out", prep_out, "Output directory (default: <out root>/<config hash>-aux)");

  auto* pipe = app.add_subcommand("pipeline", "Run pipeline stages into a run directory");
  add_common(pipe);
  std::string stages = "all";
  std::string run_dir, out_root;
  pipe->add_option("-s,--stages", stages, "Comma-separated subset of pretrain,finetune,fewshot,generate,evaluate");
  pipe->add_option("-p,--policy", common.policy, "Override the freeze policies (comma-separated)");
  pipe->add_option("--run-dir", run_dir, "Continue in this run directory instead of creating one");
  pipe->add_option("-o,--out", out_root, "Root for new run directories (default: $XLGEN_OUT_ROOT or ./runs)");

  auto* report = app.add_subcommand("report", "Tables and few-shot curves from run directories");
  std::vector<std::string> report_runs;
  std::string report_out = "report";
  report->add_option("runs", report_runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("-o,--out", report_out, "Output directory");

  auto* testbed = app.add_subcommand("make-testbed", "Write the synthetic testbed and a matching run config");
  std::string tb_out, tb_langs = "aa,bb", tb_policies;
  std::uint64_t tb_seed = 1;
  double tb_scale = 1.0;
  testbed->add_option("-o,--out", tb_out, "Output directory")->required();
  testbed->add_option("--seed", tb_seed, "Testbed and run seed");
  testbed->add_option("--languages", tb_langs, "Language codes; the first is supervised");
  testbed->add_option("-p,--policy", tb_policies, "Freeze policies for the config (default: all)");
  testbed->add_option("--step-scale", tb_scale, "Scale every training step count")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Score an outputs file against references");
  std::string ev_outputs, ev_refs, ev_task, ev_lang, ev_tokenizer, ev_metrics, ev_checkpoint, ev_json;
  evaluate->add_option("--outputs", ev_outputs, "Line-delimited hypotheses")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--references", ev_refs, "References (.jsonl uses the tgt field)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--task", ev_task, "Task name (selects default metrics)")->required();
  evaluate->add_option("--lang", ev_lang, "Output language code")->required();
  evaluate->add_option("--tokenizer", ev_tokenizer, "Tokenizer id (default: per language)");
  evaluate->add_option("--metrics", ev_metrics, "Comma-separated metric names");
  evaluate->add_option("--checkpoint", ev_checkpoint, "Checkpoint whose embeddings score embed_f");
  evaluate->add_option("--json", ev_json, "Also write the report here");

  std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*prep) {
      const RunConfig cfg = load_config(common);
      const fs::path out = prep_out.empty() ? default_out_root() / (cfg.hash() + "-aux") : fs::path(prep_out);
      const auto counts = cmd_prepare_aux(cfg, out);
      std::cout << out.string() << "\n";
      if (!quiet) std::cerr << "train " << counts.train << ", valid " << counts.valid << ", test " << counts.test << "\n";
    } else if (*pipe) {
      const RunConfig cfg = load_config(common);
      PipelineOptions options;
      options.verbose = !quiet;
      options.out_root = out_root.empty() ? default_out_root() : fs::path(out_root);
      if (!run_dir.empty()) options.run_dir = run_dir;
      const fs::path run = cmd_pipeline(cfg, parse_stages(stages), options);
      std::cout << run.string() << "\n";
      if (fs::is_regular_file(run / "summary.txt") && !quiet) {
        std::ifstream in(run / "summary.txt");
        std::cerr << in.rdbuf();
      }
    } else if (*report) {
      std::vector<fs::path> runs(report_runs.begin(), report_runs.end());
      const auto files = cmd_report(runs, report_out);
      std::cout << files.table_txt.string() << "\n" << files.table_tsv.string() << "\n";
      for (const auto& c : files.curves) std::cout << c.string() << "\n";
    } else if (*testbed) {
      TestbedConfig tc;
      tc.languages = split_list(tb_langs);
      if (tc.languages.empty()) throw ConfigError("make-testbed: no languages");
      for (const auto& l : tc.languages) {
        if (!is_valid_language_code(l)) throw ConfigError("make-testbed: invalid language code '" + l + "'");
      }
      tc.hrl = tc.languages.front();
      tc.seed = tb_seed;
      TestbedRunOptions options;
      options.step_scale = tb_scale;
      if (!tb_policies.empty()) {
        options.policies.clear();
        for (const auto& p : split_list(tb_policies)) options.policies.push_back(parse_freeze_kind(p));
      }
      std::cout << write_testbed_run(tc, tb_out, options).string() << "\n";
    } else if (*evaluate) {
      eval::EvalInputs inputs;
      inputs.task = ev_task;
      inputs.lang = LanguageTag(ev_lang).code();
      for (const auto& m : split_list(ev_metrics)) inputs.metrics.insert(eval::parse_metric(m));
      std::shared_ptr<const eval::EvalTokenizer> tokenizer;
      if (!ev_tokenizer.empty()) {
        try {
          tokenizer = eval::tokenizer_by_id(ev_tokenizer);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
        inputs.tokenizer = tokenizer.get();
      }
      std::unique_ptr<eval::ModelTokenEmbedder> embedder;
      const auto metrics = inputs.metrics.empty() ? eval::metrics_for_task(ev_task) : inputs.metrics;
      if (metrics.contains(eval::Metric::EMBED)) {
        if (ev_checkpoint.empty()) throw ConfigError("evaluate: embed_f needs --checkpoint");
        const Checkpoint ckpt = load_checkpoint(ev_checkpoint);
        embedder = std::make_unique<eval::ModelTokenEmbedder>(ckpt.model, ckpt.vocab);
        inputs.embedder = embedder.get();
      }
      const auto rep = eval::evaluate(read_lines(ev_outputs), read_references(ev_refs), inputs);
      std::cout << rep.to_table();
      if (!ev_json.empty()) {
        std::ofstream out(ev_json, std::ios::binary | std::ios::trunc);
        out << rep.to_json();
        if (!out) throw DataError("cannot write " + ev_json);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace xlgen::cli
