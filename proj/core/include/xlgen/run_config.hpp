#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xlgen/auxdata.hpp"
#include "xlgen/eval/report.hpp"
#include "xlgen/freeze.hpp"
#include "xlgen/model.hpp"
#include "xlgen/schedule.hpp"

namespace xlgen {

struct CorpusEntry {
  std::filesystem::path path;
  std::string lang;
};

/// A task dataset in one language. Entries with `train` supervise
/// fine-tuning; entries with `test` are decoded and scored; entries with
/// `fewshot_train` feed the few-shot stage.
struct TaskEntry {
  std::string name;
  std::string lang;
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> valid;
  std::optional<std::filesystem::path> test;
  std::optional<std::filesystem::path> fewshot_train;
  std::optional<std::filesystem::path> fewshot_valid;
};

struct AuxSection {
  std::size_t n_per_language = 11333;
  std::size_t valid_per_language = 333;
  std::size_t test_per_language = 333;
  AuxConfig sampling;
  std::size_t partitions = 1;
  bool parallel = false;
};

struct FreezeSection {
  std::vector<FreezeKind> policies{FreezeKind::WE_DEC};
  std::optional<SubsetSpec> subset;
  double ewc_strength = 1.0;
  std::size_t ewc_samples = 200;
  std::size_t augmentation = 0;  // aux examples mixed into fine-tuning
};

struct FewShotSection {
  std::vector<std::size_t> sizes{100, 500, 1000};
  std::vector<FreezeKind> policies{FreezeKind::WE_DEC};
  bool keep_frozen = false;
  std::size_t cap = 1000;
};

struct GenerateSection {
  std::size_t beam_size = 5;
  std::size_t max_len = 64;
  double length_penalty = 0.0;
};

struct EvalSection {
  std::set<eval::Metric> metrics;  // empty: per-task defaults
  std::string tokenizer = "default-unicode-v1";
  std::string fidelity = "vocabulary";  // vocabulary | script | none
  std::map<std::string, std::vector<std::pair<char32_t, char32_t>>> scripts;
};

enum class Stage { Pretrain, Finetune, FewShot, Generate, Evaluate };

std::string to_string(Stage s);
/// Parses "a,b,c" and returns the stages in pipeline order, deduplicated.
/// Throws ConfigError on an unknown name or an empty list.
std::vector<Stage> parse_stages(std::string_view list);
const std::vector<Stage>& all_stages();

/// Declarative run description, loaded from JSON. Relative paths resolve
/// against the directory of the config file.
struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<CorpusEntry> corpora;
  AuxSection aux;
  ModelConfig model;
  TrainConfig pretrain;
  TrainConfig finetune;
  TrainConfig fewshot;
  FreezeSection freeze;
  FewShotSection fewshot_setup;
  GenerateSection generate;
  EvalSection eval;
  std::vector<TaskEntry> tasks;
  std::optional<std::filesystem::path> init_checkpoint;  // fine-tune start without pretraining

  /// Throws ConfigError on malformed JSON, unknown keys, or invalid values.
  static RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Canonical JSON with absolute paths; equal configs give equal text.
  std::string to_json() const;
  std::string hash() const;  // 16 hex digits of the canonical form

  /// Throws ConfigError when a declared stage has nothing to do, DataError
  /// when a referenced file is missing.
  void validate_for(const std::vector<Stage>& stages) const;

  /// Phase configs with seeds derived from `seed`.
  TrainConfig phase_config(Stage stage) const;
};

}  // namespace xlgen
