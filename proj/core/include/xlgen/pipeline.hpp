#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xlgen/run_config.hpp"
#include "xlgen/testbed.hpp"

namespace xlgen {

struct PipelineOptions {
  // Existing run directory to continue; otherwise a new one is created
  // under out_root named <config hash>-<UTC timestamp>.
  std::optional<std::filesystem::path> run_dir;
  std::filesystem::path out_root = "runs";
  bool verbose = true;
};

struct AuxSplitCounts {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

/// Writes aux/{train,valid,test}.jsonl and aux/manifest.json under `dir`.
/// Throws DataError when a corpus is too small for the passage range.
AuxSplitCounts cmd_prepare_aux(const RunConfig& config, const std::filesystem::path& dir);

/// Runs the given stages in pipeline order and returns the run directory.
///
/// Layout:
///   config.json, manifest.json (timestamps and timings live only here)
///   aux/                      auxiliary splits
///   pretrain/                 checkpoints/step_<n>.ckpt, best.ckpt, metrics.jsonl
///   finetune/<POLICY>/        same, plus frozen_mask.json
///   fewshot/<POLICY>/<task>.<lang>/n<k>/
///   outputs/<system>/<task>.<lang>.txt
///   reports/<system>/<task>.<lang>.{json,txt}
///   summary.txt, summary.tsv  rows = systems, columns = metrics
/// A system is a fine-tuning policy ("WE_DEC") or a few-shot run on top of
/// one ("WE_DEC+fs100").
std::filesystem::path cmd_pipeline(const RunConfig& config, const std::vector<Stage>& stages,
                                   const PipelineOptions& options);

struct ReportFiles {
  std::filesystem::path table_txt;
  std::filesystem::path table_tsv;
  std::vector<std::filesystem::path> curves;  // one SVG per (task, lang, metric)
};

/// Comparison tables over all EvalReports found under the run directories,
/// and metric-vs-examples curves for few-shot sweeps (the fine-tuned system
/// is the n = 0 point). Throws DataError if no report is found.
ReportFiles cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                       const std::filesystem::path& out_dir);

struct TestbedRunOptions {
  std::vector<FreezeKind> policies = all_freeze_kinds();
  std::vector<FreezeKind> fewshot_policies{FreezeKind::WE_DEC};
  std::vector<std::size_t> fewshot_sizes{100, 500, 1000};
  // Multiplies every step count (steps, warmup, eval interval) for quick runs.
  double step_scale = 1.0;
};

/// Writes the synthetic testbed under `dir` and a matching `dir/config.json`
/// with desk-scale model and training settings; returns the config path.
/// The first language supervises fine-tuning, the others are zero-shot
/// targets whose train/valid splits form the few-shot pools.
std::filesystem::path write_testbed_run(const TestbedConfig& testbed, const std::filesystem::path& dir,
                                        const TestbedRunOptions& options = {});

}  // namespace xlgen
