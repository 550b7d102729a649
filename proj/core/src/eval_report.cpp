#include "xlgen/eval/report.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xlgen/error.hpp"
#include "xlgen/records.hpp"

namespace xlgen::eval {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::BLEU4: return "bleu4";
    case Metric::ROUGE1: return "rouge1";
    case Metric::ROUGE2: return "rouge2";
    case Metric::ROUGEL: return "rougeL";
    case Metric::EMBED: return "embed_f";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : {Metric::BLEU4, Metric::ROUGE1, Metric::ROUGE2, Metric::ROUGEL, Metric::EMBED}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

std::set<Metric> metrics_for_task(std::string_view task) {
  if (task == "NHG" || task == "ATS" || task == "FSE") return {Metric::ROUGE1, Metric::ROUGE2, Metric::ROUGEL};
  if (task == "QG" || task == "DG") return {Metric::BLEU4, Metric::ROUGEL, Metric::EMBED};
  return {Metric::BLEU4, Metric::ROUGE1, Metric::ROUGE2, Metric::ROUGEL, Metric::EMBED};
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["lang"] = lang;
  j["bleu4"] = optional_number(bleu4);
  j["rouge1"] = optional_number(rouge1);
  j["rouge2"] = optional_number(rouge2);
  j["rougeL"] = optional_number(rougeL);
  j["embed_f"] = optional_number(embed_f);
  j["language_fidelity"] = optional_number(language_fidelity);
  j["n_examples"] = n_examples;
  j["tokenizer_id"] = tokenizer_id;
  j["embedder_id"] = embedder_id;
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.task = j.at("task").get<std::string>();
    r.lang = j.at("lang").get<std::string>();
    r.bleu4 = read_optional(j, "bleu4");
    r.rouge1 = read_optional(j, "rouge1");
    r.rouge2 = read_optional(j, "rouge2");
    r.rougeL = read_optional(j, "rougeL");
    r.embed_f = read_optional(j, "embed_f");
    r.language_fidelity = read_optional(j, "language_fidelity");
    r.n_examples = j.at("n_examples").get<std::size_t>();
    r.tokenizer_id = j.value("tokenizer_id", "");
    r.embedder_id = j.value("embedder_id", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed EvalReport: ") + e.what());
  }
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  auto row = [&](const char* name, const std::optional<double>& v) {
    char buf[64];
    if (v) {
      std::snprintf(buf, sizeof(buf), "%-18s %8.2f\n", name, *v);
    } else {
      std::snprintf(buf, sizeof(buf), "%-18s %8s\n", name, "-");
    }
    out << buf;
  };
  out << "task " << task << "  lang " << lang << "  n=" << n_examples << "\n";
  row("BLEU-4", bleu4);
  row("ROUGE-1", rouge1);
  row("ROUGE-2", rouge2);
  row("ROUGE-L", rougeL);
  row("embed-F", embed_f);
  row("lang-fidelity", language_fidelity ? std::optional<double>(*language_fidelity * 100.0) : std::nullopt);
  out << "tokenizer " << tokenizer_id;
  if (!embedder_id.empty()) out << "  embedder " << embedder_id;
  out << "\n";
  return out.str();
}

EvalReport evaluate(const std::vector<std::string>& outputs, const std::vector<std::string>& references,
                    const EvalInputs& inputs) {
  if (outputs.size() != references.size()) {
    throw DataError("evaluate: " + std::to_string(outputs.size()) + " outputs vs " +
                    std::to_string(references.size()) + " references");
  }
  if (outputs.empty()) throw DataError("evaluate: no examples");
  const auto metrics = inputs.metrics.empty() ? metrics_for_task(inputs.task) : inputs.metrics;
  std::shared_ptr<const EvalTokenizer> owned;
  const EvalTokenizer* tokenizer = inputs.tokenizer;
  if (!tokenizer) {
    owned = tokenizer_for(LanguageTag(inputs.lang));
    tokenizer = owned.get();
  }
  if (metrics.contains(Metric::EMBED) && !inputs.embedder) {
    throw std::invalid_argument("evaluate: embedding metric requested without an embedder");
  }

  std::vector<Tokens> hyp, ref;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    hyp.push_back(tokenizer->tokenize(outputs[i]));
    ref.push_back(tokenizer->tokenize(references[i]));
    if (ref.back().empty()) throw DataError("evaluate: empty reference on line " + std::to_string(i + 1));
  }

  EvalReport report;
  report.task = inputs.task;
  report.lang = inputs.lang;
  report.n_examples = outputs.size();
  report.tokenizer_id = tokenizer->id();
  if (metrics.contains(Metric::EMBED)) report.embedder_id = inputs.embedder->id();

  if (metrics.contains(Metric::BLEU4)) report.bleu4 = bleu4(hyp, ref);
  auto mean_f = [&](auto score) {
    double sum = 0.0;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (!hyp[i].empty()) sum += score(hyp[i], ref[i]).f1;
    }
    return 100.0 * sum / static_cast<double>(hyp.size());
  };
  for (auto [metric, variant] : {std::pair{Metric::ROUGE1, RougeVariant::R1},
                                 std::pair{Metric::ROUGE2, RougeVariant::R2},
                                 std::pair{Metric::ROUGEL, RougeVariant::RL}}) {
    if (!metrics.contains(metric)) continue;
    const double v = mean_f([variant](const Tokens& h, const Tokens& r) { return rouge(h, r, variant); });
    if (metric == Metric::ROUGE1) report.rouge1 = v;
    if (metric == Metric::ROUGE2) report.rouge2 = v;
    if (metric == Metric::ROUGEL) report.rougeL = v;
  }
  if (metrics.contains(Metric::EMBED)) {
    report.embed_f = mean_f([&](const Tokens& h, const Tokens& r) { return embed_score(h, r, *inputs.embedder); });
  }
  if (inputs.attributor) {
    report.language_fidelity = language_fidelity(outputs, inputs.lang, *inputs.attributor, *tokenizer);
  }
  return report;
}

EvalReport evaluate_run(const std::filesystem::path& outputs_file,
                        const std::filesystem::path& references_file, const EvalInputs& inputs) {
  return evaluate(read_lines(outputs_file), read_lines(references_file), inputs);
}

}  // namespace xlgen::eval
