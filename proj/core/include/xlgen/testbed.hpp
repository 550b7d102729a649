#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xlgen/corpus.hpp"
#include "xlgen/records.hpp"
#include "xlgen/rng.hpp"

namespace xlgen {

/// Synthetic cross-lingual testbed: one monolingual corpus per language
/// (disjoint vocabularies) plus a first-sentence-extraction (FSE) task in
/// every language. Supervision is meant to come from `hrl` only; the other
/// languages' train splits serve as the few-shot pool.
struct TestbedConfig {
  std::vector<std::string> languages{"aa", "bb"};
  std::string hrl = "aa";
  std::size_t vocab_size = 40;
  std::pair<std::size_t, std::size_t> sentence_len{3, 5};
  std::size_t corpus_sentences = 4000;
  std::pair<std::size_t, std::size_t> task_passage_len{2, 4};
  std::size_t task_train = 2000;
  std::size_t task_valid = 200;
  std::size_t task_test = 200;
  std::size_t lrl_train = 1000;
  std::size_t lrl_valid = 100;
  std::size_t lrl_test = 200;
  std::uint64_t seed = 1;
};

struct TaskSplits {
  std::vector<TextPair> train;
  std::vector<TextPair> valid;
  std::vector<TextPair> test;
};

struct Testbed {
  std::vector<SentenceCorpus> corpora;     // in `languages` order
  std::map<std::string, TaskSplits> fse;   // by language code
};

/// FSE pairs: the source is a window of `passage_len` consecutive sentences,
/// the target its first sentence.
std::vector<TextPair> make_fse_examples(const SentenceCorpus& corpus, std::size_t n,
                                        std::pair<std::size_t, std::size_t> passage_len, Rng& rng);

Testbed make_testbed(const TestbedConfig& cfg);

/// Layout: corpora/<lang>.txt and tasks/FSE/<lang>/{train,valid,test}.jsonl.
void write_testbed(const Testbed& testbed, const std::filesystem::path& dir);

}  // namespace xlgen
