#include "xlgen/testbed.hpp"

#include <stdexcept>

#include "xlgen/auxdata.hpp"
#include "xlgen/error.hpp"
#include "xlgen/text.hpp"

namespace xlgen {

std::vector<TextPair> make_fse_examples(const SentenceCorpus& corpus, std::size_t n,
                                        std::pair<std::size_t, std::size_t> passage_len, Rng& rng) {
  std::vector<TextPair> out;
  out.reserve(n);
  const auto& code = corpus.lang().code();
  for (std::size_t i = 0; i < n; ++i) {
    const auto passage = sample_passage(corpus, passage_len.first, passage_len.second, rng);
    out.push_back({text::join(passage, " "), passage.front(), code, code});
  }
  return out;
}

Testbed make_testbed(const TestbedConfig& cfg) {
  if (cfg.languages.empty()) throw std::invalid_argument("testbed: no languages");
  bool has_hrl = false;
  Testbed tb;
  for (std::size_t li = 0; li < cfg.languages.size(); ++li) {
    const LanguageTag lang(cfg.languages[li]);
    has_hrl = has_hrl || lang.code() == cfg.hrl;
    tb.corpora.push_back(generate_synthetic_corpus(
        lang, {cfg.vocab_size, cfg.corpus_sentences, cfg.sentence_len, Rng::derive(cfg.seed, 0)}));
    // Task passages come from a separate draw of the same language.
    const auto task_corpus = generate_synthetic_corpus(
        lang, {cfg.vocab_size, cfg.corpus_sentences, cfg.sentence_len, Rng::derive(cfg.seed, 1)});
    Rng rng(Rng::derive(Rng::derive(cfg.seed, 2), li));
    const bool hrl = lang.code() == cfg.hrl;
    TaskSplits splits;
    splits.train = make_fse_examples(task_corpus, hrl ? cfg.task_train : cfg.lrl_train, cfg.task_passage_len, rng);
    splits.valid = make_fse_examples(task_corpus, hrl ? cfg.task_valid : cfg.lrl_valid, cfg.task_passage_len, rng);
    splits.test = make_fse_examples(task_corpus, hrl ? cfg.task_test : cfg.lrl_test, cfg.task_passage_len, rng);
    tb.fse.emplace(lang.code(), std::move(splits));
  }
  if (!has_hrl) throw std::invalid_argument("testbed: hrl '" + cfg.hrl + "' not among languages");
  return tb;
}

void write_testbed(const Testbed& testbed, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "corpora");
  for (const auto& corpus : testbed.corpora) {
    save_corpus(corpus, dir / "corpora" / (corpus.lang().code() + ".txt"));
  }
  for (const auto& [code, splits] : testbed.fse) {
    const auto task_dir = dir / "tasks" / "FSE" / code;
    std::filesystem::create_directories(task_dir);
    write_jsonl(task_dir / "train.jsonl", splits.train);
    write_jsonl(task_dir / "valid.jsonl", splits.valid);
    write_jsonl(task_dir / "test.jsonl", splits.test);
  }
}

}  // namespace xlgen
