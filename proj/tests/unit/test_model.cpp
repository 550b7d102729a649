#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "fixtures.hpp"
#include "xlgen/beam.hpp"
#include "xlgen/checkpoint.hpp"
#include "xlgen/error.hpp"
#include "xlgen/loss.hpp"
#include "xlgen/model.hpp"

using namespace xlgen;
using xlgen::testing::random_pair;
using xlgen::testing::tiny_config;
using xlgen::testing::toy_vocab;

namespace {

double logsumexp_row(const Matrix& m, Eigen::Index r) {
  const double mx = m.row(r).maxCoeff();
  return mx + std::log((m.row(r).array() - mx).exp().sum());
}

std::vector<EncodedPair> batch_of(const Vocabulary& vocab, std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<EncodedPair> out;
  for (int i = 0; i < n; ++i) out.push_back(random_pair(vocab, rng, i % 2 ? "aa" : "bb", "aa"));
  return out;
}

}  // namespace

TEST_CASE("tag_sequence appends source and target tags") {
  const auto vocab = toy_vocab();
  const std::vector<TokenId> payload{vocab.id("aa_1"), vocab.id("aa_2")};
  const auto seq = tag_sequence(payload, LanguageTag("aa"), LanguageTag("bb"), vocab);
  REQUIRE(seq.tokens.size() == 4);
  CHECK(seq.tokens[2] == vocab.id("<faa>"));
  CHECK(seq.tokens[3] == vocab.id("<2bb>"));
  CHECK(seq.decoder_start() == vocab.id("<2bb>"));

  const auto empty = tag_sequence({}, LanguageTag("aa"), LanguageTag("aa"), vocab);
  CHECK(empty.tokens == std::vector<TokenId>{vocab.id("<faa>"), vocab.id("<2aa>")});

  CHECK_THROWS_AS(tag_sequence(payload, LanguageTag("zz"), LanguageTag("aa"), vocab),
                  std::invalid_argument);
  const std::vector<TokenId> tagged{vocab.id("<2aa>")};
  CHECK_THROWS_AS(tag_sequence(tagged, LanguageTag("aa"), LanguageTag("aa"), vocab),
                  std::invalid_argument);
}

TEST_CASE("tag_sequence round trip over random payloads") {
  const auto vocab = toy_vocab();
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TokenId> payload(rng.uniform_index(12));
    for (auto& t : payload) t = vocab.id((rng.bernoulli(0.5) ? "aa_" : "bb_") + std::to_string(rng.uniform_index(6)));
    const auto seq = tag_sequence(payload, LanguageTag("bb"), LanguageTag("aa"), vocab);
    CHECK(seq.tokens.size() == payload.size() + 2);
    const std::vector<TokenId> stripped(seq.payload().begin(), seq.payload().end());
    CHECK(stripped == payload);
  }
}

TEST_CASE("forward log-probabilities normalize") {
  const auto vocab = toy_vocab();
  Seq2SeqModel model(tiny_config(static_cast<int>(vocab.size())));
  model.initialize(3);
  const auto batch = batch_of(vocab, 5, 6);
  const auto pass = model.forward(batch, {});
  std::size_t expected_rows = 0;
  for (const auto& p : batch) expected_rows += p.target.size();
  REQUIRE(pass.log_probs.rows() == static_cast<Eigen::Index>(expected_rows));
  for (Eigen::Index r = 0; r < pass.log_probs.rows(); ++r) {
    CHECK(std::abs(logsumexp_row(pass.log_probs, r)) < 1e-5);
  }
}

TEST_CASE("forward is batch-order equivariant") {
  const auto vocab = toy_vocab();
  Seq2SeqModel model(tiny_config(static_cast<int>(vocab.size())));
  model.initialize(3);
  auto batch = batch_of(vocab, 9, 4);
  const auto a = model.forward(batch, {});
  std::vector<EncodedPair> reversed(batch.rbegin(), batch.rend());
  const auto b = model.forward(reversed, {});

  std::vector<Eigen::Index> offsets{0};
  for (const auto& p : batch) offsets.push_back(offsets.back() + static_cast<Eigen::Index>(p.target.size()));
  Eigen::Index row = 0;
  for (std::size_t i = batch.size(); i-- > 0;) {
    const auto len = static_cast<Eigen::Index>(batch[i].target.size());
    CHECK((a.log_probs.middleRows(offsets[i], len) - b.log_probs.middleRows(row, len))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    row += len;
  }
}

TEST_CASE("zero output projection gives a uniform distribution") {
  const auto vocab = toy_vocab();
  auto cfg = tiny_config(static_cast<int>(vocab.size()));
  cfg.tie_output_projection = false;
  Seq2SeqModel model(cfg);
  model.initialize(4);
  auto& params = model.parameters();
  params[*params.find("output_projection.weight")].value.setZero();
  const auto batch = batch_of(vocab, 2, 3);
  const auto pass = model.forward(batch, {});
  const auto loss = loss_label_smoothed(pass.log_probs, pass.targets, 0.0, Vocabulary::kPad);
  CHECK(loss.loss == doctest::Approx(std::log(static_cast<double>(vocab.size()))).epsilon(1e-12));
}

TEST_CASE("forward rejects bad ids and lengths") {
  const auto vocab = toy_vocab();
  auto cfg = tiny_config(static_cast<int>(vocab.size()));
  cfg.max_positions = 4;
  Seq2SeqModel model(cfg);
  model.initialize(1);
  Rng rng(1);
  auto pair = random_pair(vocab, rng, "aa", "aa", 1);
  pair.target.back() = static_cast<TokenId>(vocab.size());
  CHECK_THROWS_AS(model.forward(std::span(&pair, 1), {}), std::invalid_argument);
  pair.target = std::vector<TokenId>(5, Vocabulary::kEos);
  CHECK_THROWS_AS(model.forward(std::span(&pair, 1), {}), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(std::span<const EncodedPair>{}, {}), std::invalid_argument);
}

namespace {

double batch_loss(const Seq2SeqModel& model, const std::vector<EncodedPair>& batch, double eps) {
  const auto pass = model.forward(batch, {.keep_cache = false});
  return loss_label_smoothed(pass.log_probs, pass.targets, eps, Vocabulary::kPad).loss;
}

// Central-difference check on a sample of entries of every parameter tensor.
void gradient_check(Seq2SeqModel& model, const std::vector<EncodedPair>& batch, int per_tensor) {
  const double eps_ls = model.config().label_smoothing;
  model.parameters().zero_grad();
  const auto pass = model.forward(batch, {});
  const auto loss = loss_label_smoothed(pass.log_probs, pass.targets, eps_ls, Vocabulary::kPad, true);
  model.backward(pass, loss.grad);

  Rng rng(77);
  int checked = 0;
  for (auto& p : model.parameters()) {
    for (int s = 0; s < per_tensor; ++s) {
      const auto k = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(p.value.size())));
      const double saved = p.value.data()[k];
      const double h = 1e-5;
      p.value.data()[k] = saved + h;
      const double up = batch_loss(model, batch, eps_ls);
      p.value.data()[k] = saved - h;
      const double down = batch_loss(model, batch, eps_ls);
      p.value.data()[k] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p.grad.data()[k];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
      INFO(p.name << "[" << k << "] analytic=" << analytic << " numeric=" << numeric);
      CHECK(std::abs(numeric - analytic) / scale < 1e-3);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

}  // namespace

TEST_CASE("loss gradients match finite differences on a tiny model") {
  const auto vocab = toy_vocab();
  for (bool tied : {true, false}) {
    auto cfg = tiny_config(static_cast<int>(vocab.size()));
    cfg.tie_output_projection = tied;
    Seq2SeqModel model(cfg);
    model.initialize(21);
    gradient_check(model, batch_of(vocab, 8, 3), 4);
  }
}

TEST_CASE("loss gradients match finite differences on the desk model") {
  const auto vocab = toy_vocab();
  ModelConfig cfg;
  cfg.vocab_size = static_cast<int>(vocab.size());
  cfg.dropout = 0.0;
  Seq2SeqModel model(cfg);
  model.initialize(5);
  gradient_check(model, batch_of(vocab, 12, 2), 2);
}

TEST_CASE("beam size 1 equals greedy decoding") {
  const auto vocab = toy_vocab();
  Seq2SeqModel model(tiny_config(static_cast<int>(vocab.size())));
  model.initialize(8);
  Rng rng(4);
  BeamOptions options{.beam_size = 1, .max_len = 8};
  options.banned = non_generable_tokens(vocab);
  for (int i = 0; i < 20; ++i) {
    const auto pair = random_pair(vocab, rng, "aa", "bb");
    const ModelScorer scorer(model, pair.source.tokens);
    const auto beam = beam_search(scorer, pair.source.decoder_start(), options);
    const auto greedy = greedy_search(scorer, pair.source.decoder_start(), options);
    CHECK(beam.tokens == greedy.tokens);
    CHECK(beam.score == doctest::Approx(greedy.score).epsilon(1e-12));

    auto wide = options;
    wide.beam_size = 5;
    CHECK(beam_search(scorer, pair.source.decoder_start(), wide).score >= greedy.score - 1e-12);
  }
}

TEST_CASE("beam search rejects degenerate options") {
  const auto vocab = toy_vocab();
  Seq2SeqModel model(tiny_config(static_cast<int>(vocab.size())));
  model.initialize(8);
  const std::vector<TokenId> src{vocab.id("<faa>"), vocab.id("<2aa>")};
  const ModelScorer scorer(model, src);
  CHECK_THROWS_AS(beam_search(scorer, src.back(), {.beam_size = 0}), std::invalid_argument);
  CHECK_THROWS_AS(beam_search(scorer, src.back(), {.max_len = 0}), std::invalid_argument);
}

TEST_CASE("incremental scoring agrees with teacher forcing") {
  const auto vocab = toy_vocab();
  Seq2SeqModel model(tiny_config(static_cast<int>(vocab.size())));
  model.initialize(13);
  Rng rng(6);
  const auto pair = random_pair(vocab, rng, "bb", "aa");
  const auto pass = model.forward(std::span(&pair, 1), {});
  const auto encoded = model.encode(pair.source.tokens);
  std::vector<TokenId> prefix{pair.source.decoder_start()};
  for (std::size_t i = 0; i < pair.target.size(); ++i) {
    const Matrix lp = model.next_token_log_probs(encoded, {prefix});
    CHECK((lp.row(0) - pass.log_probs.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff() < 1e-10);
    prefix.push_back(pair.target[i]);
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const auto vocab = toy_vocab();
  Seq2SeqModel model(tiny_config(static_cast<int>(vocab.size())));
  model.initialize(17);
  const auto path = std::filesystem::temp_directory_path() / "xlgen_test_ckpt.bin";
  save_checkpoint(path, model, vocab, {{"phase", "test"}});
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.model.config() == model.config());
  CHECK(loaded.vocab.tokens() == vocab.tokens());
  CHECK(loaded.metadata.at("phase") == "test");
  const auto batch = batch_of(vocab, 3, 4);
  const auto a = model.forward(batch, {});
  const auto b = loaded.model.forward(batch, {});
  CHECK(a.log_probs.cwiseEqual(b.log_probs).all());

  // Same inputs -> same bytes.
  const auto path2 = std::filesystem::temp_directory_path() / "xlgen_test_ckpt2.bin";
  save_checkpoint(path2, loaded.model, loaded.vocab, loaded.metadata);
  CHECK(std::filesystem::file_size(path) == std::filesystem::file_size(path2));

  CHECK_THROWS_AS(load_checkpoint(path.string() + ".missing"), DataError);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}
