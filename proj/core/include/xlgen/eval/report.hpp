#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xlgen/eval/fidelity.hpp"
#include "xlgen/eval/metrics.hpp"

namespace xlgen::eval {

enum class Metric { BLEU4, ROUGE1, ROUGE2, ROUGEL, EMBED };

std::string to_string(Metric m);
Metric parse_metric(std::string_view name);  // throws ConfigError

/// Metrics reported for a task: NHG, ATS and FSE (first-sentence
/// extraction) use ROUGE-1/2/L; QG and DG use BLEU-4, ROUGE-L and the
/// embedding F-score; anything else gets every metric.
std::set<Metric> metrics_for_task(std::string_view task);

/// Scores are on the reported 0-100 scale; metrics that do not apply to the
/// task are empty.
struct EvalReport {
  std::string task;
  std::string lang;
  std::optional<double> bleu4;
  std::optional<double> rouge1;
  std::optional<double> rouge2;
  std::optional<double> rougeL;
  std::optional<double> embed_f;
  std::optional<double> language_fidelity;  // fraction in [0,1]
  std::size_t n_examples = 0;
  std::string tokenizer_id;
  std::string embedder_id;

  std::string to_json() const;  // one JSON document, fixed key order
  static EvalReport from_json(const std::string& text);
  std::string to_table() const;  // human-readable
};

struct EvalInputs {
  std::string task;
  std::string lang;
  std::set<Metric> metrics;  // empty: metrics_for_task(task)
  const EvalTokenizer* tokenizer = nullptr;        // null: tokenizer_for(lang)
  const TokenEmbedder* embedder = nullptr;         // required for EMBED
  const LanguageAttributor* attributor = nullptr;  // optional fidelity
};

/// Scores aligned hypothesis/reference lists. ROUGE and the embedding score
/// are averaged over examples; an empty hypothesis scores 0 on them. Throws
/// DataError on misaligned or empty input or an empty reference.
EvalReport evaluate(const std::vector<std::string>& outputs, const std::vector<std::string>& references,
                    const EvalInputs& inputs);

/// File form: line-delimited UTF-8 outputs and references.
EvalReport evaluate_run(const std::filesystem::path& outputs_file,
                        const std::filesystem::path& references_file, const EvalInputs& inputs);

}  // namespace xlgen::eval
