#include <benchmark/benchmark.h>

#include "xlgen/auxdata.hpp"
#include "xlgen/beam.hpp"
#include "xlgen/eval/metrics.hpp"
#include "xlgen/loss.hpp"
#include "xlgen/model.hpp"
#include "xlgen/testbed.hpp"
#include "xlgen/trainer.hpp"

using namespace xlgen;

namespace {

struct Desk {
  Vocabulary vocab;
  Seq2SeqModel model;
  std::vector<EncodedPair> data;
};

Desk& desk() {
  static Desk d = [] {
    std::vector<std::string> texts;
    for (const char* code : {"aa", "bb"}) {
      for (const auto& w : synthetic_vocabulary(LanguageTag(code), 40)) texts.push_back(w);
    }
    auto vocab = Vocabulary::build({LanguageTag("aa"), LanguageTag("bb")}, texts);
    ModelConfig cfg;
    cfg.d_model = 64;
    cfg.ffn_dim = 256;
    cfg.n_heads = 4;
    cfg.vocab_size = static_cast<int>(vocab.size());
    Seq2SeqModel model(cfg);
    model.initialize(1);
    const auto corpus = generate_synthetic_corpus(LanguageTag("aa"), {40, 2000, {3, 5}, 2});
    Rng rng(3);
    std::vector<EncodedPair> data;
    for (const auto& p : make_fse_examples(corpus, 256, {2, 4}, rng)) data.push_back(encode_pair(p, vocab));
    return Desk{std::move(vocab), std::move(model), std::move(data)};
  }();
  return d;
}

std::vector<EncodedPair> batch_of_tokens(std::size_t budget) {
  std::vector<EncodedPair> batch;
  std::size_t tokens = 0;
  for (const auto& e : desk().data) {
    if (tokens + e.source.tokens.size() + e.target.size() > budget) break;
    tokens += e.source.tokens.size() + e.target.size();
    batch.push_back(e);
  }
  return batch;
}

void BM_TrainStepForwardBackward(benchmark::State& state) {
  auto& d = desk();
  const auto batch = batch_of_tokens(static_cast<std::size_t>(state.range(0)));
  Rng rng(5);
  for (auto _ : state) {
    d.model.parameters().zero_grad();
    const auto pass = d.model.forward(batch, {.dropout = 0.1, .rng = &rng});
    const auto loss = loss_label_smoothed(pass.log_probs, pass.targets, 0.1, Vocabulary::kPad, true);
    d.model.backward(pass, loss.grad);
    benchmark::DoNotOptimize(loss.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainStepForwardBackward)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_BeamSearch(benchmark::State& state) {
  auto& d = desk();
  BeamOptions options;
  options.beam_size = static_cast<std::size_t>(state.range(0));
  options.max_len = 24;
  options.banned = non_generable_tokens(d.vocab);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& e = d.data[i++ % d.data.size()];
    benchmark::DoNotOptimize(generate(d.model, e.source, options));
  }
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

std::vector<eval::Tokens> random_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<eval::Tokens> out(n);
  for (auto& s : out) {
    s.resize(8 + rng.uniform_index(20));
    for (auto& w : s) w = "w" + std::to_string(rng.uniform_index(200));
  }
  return out;
}

void BM_Bleu4Corpus(benchmark::State& state) {
  const auto hyp = random_corpus(static_cast<std::size_t>(state.range(0)), 1);
  const auto ref = random_corpus(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(eval::bleu4(hyp, ref));
}
BENCHMARK(BM_Bleu4Corpus)->Arg(1000);

void BM_RougeL(benchmark::State& state) {
  const auto hyp = random_corpus(1000, 3);
  const auto ref = random_corpus(1000, 4);
  for (auto _ : state) {
    double sum = 0.0;
    for (std::size_t i = 0; i < hyp.size(); ++i) sum += eval::rouge(hyp[i], ref[i], eval::RougeVariant::RL).f1;
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_RougeL);

void BM_AuxGeneration(benchmark::State& state) {
  std::vector<SentenceCorpus> corpora;
  for (const char* code : {"aa", "bb"}) {
    corpora.push_back(generate_synthetic_corpus(LanguageTag(code), {40, 4000, {3, 8}, 7}));
  }
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_aux_dataset(corpora, 1000, {}, seed++));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_AuxGeneration)->Unit(benchmark::kMillisecond);

void BM_Corrupt(benchmark::State& state) {
  const auto corpus = generate_synthetic_corpus(LanguageTag("aa"), {40, 2000, {4, 12}, 9});
  std::vector<std::string> sentences(corpus.sentences().begin(), corpus.sentences().begin() + 1200);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(corrupt(sentences, {}, rng));
}
BENCHMARK(BM_Corrupt)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
