#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <set>

#include "xlgen/error.hpp"
#include "xlgen/eval/fidelity.hpp"
#include "xlgen/eval/metrics.hpp"
#include "xlgen/eval/report.hpp"
#include "xlgen/records.hpp"
#include "xlgen/rng.hpp"
#include "xlgen/text.hpp"

using namespace xlgen;
using namespace xlgen::eval;

namespace {

Tokens toks(const std::string& s) { return text::split_whitespace(s); }

// Memoized recursion over suffixes; deliberately not the table form used
// by the library.
std::size_t lcs_oracle(const Tokens& a, const Tokens& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::pair{i, j};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t v = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    memo[key] = v;
    return v;
  };
  return go(0, 0);
}

class OneHotEmbedder final : public TokenEmbedder {
 public:
  std::string id() const override { return "one-hot"; }
  ColVector embed(const std::string& token) const override {
    auto [it, _] = index_.emplace(token, index_.size());
    ColVector v = ColVector::Zero(256);
    v(static_cast<Eigen::Index>(it->second)) = 1.0;
    return v;
  }

 private:
  mutable std::map<std::string, std::size_t> index_;
};

class TableEmbedder final : public TokenEmbedder {
 public:
  explicit TableEmbedder(std::map<std::string, ColVector> table) : table_(std::move(table)) {}
  std::string id() const override { return "table"; }
  ColVector embed(const std::string& token) const override { return table_.at(token); }

 private:
  std::map<std::string, ColVector> table_;
};

ColVector vec(std::initializer_list<double> xs) {
  ColVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Brevity-penalized geometric mean with halving smoothing, computed from
// raw counts.
double bleu_formula(std::array<double, 4> correct, std::array<double, 4> total, double c, double r) {
  double log_sum = 0, smooth = 1;
  for (int n = 0; n < 4; ++n) {
    double p;
    if (correct[n] > 0) {
      p = correct[n] / total[n];
    } else {
      smooth *= 2;
      p = 1.0 / (smooth * total[n]);
    }
    log_sum += std::log(p);
  }
  const double bp = c < r ? std::exp(1 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4);
}

}  // namespace

TEST_CASE("default tokenizer splits punctuation and keeps case") {
  DefaultTokenizer tok;
  CHECK(tok.tokenize("Hello, World!") == Tokens{"Hello", ",", "World", "!"});
  CHECK(tok.tokenize("aa_5 aa_12.") == Tokens{"aa_5", "aa_12", "."});
  CHECK(tok.tokenize("राम घर गया।") == Tokens{"राम", "घर", "गया", "।"});
  CHECK(tok.tokenize("  ").empty());
  for (const auto& t : tok.tokenize("a  b\t\tc...d")) CHECK_FALSE(t.empty());
  CHECK(tokenizer_by_id("whitespace")->tokenize("a, b") == Tokens{"a,", "b"});
  CHECK_THROWS_AS(tokenizer_by_id("nope"), std::invalid_argument);
}

TEST_CASE("BLEU-4 identity and oracles") {
  CHECK(bleu4({toks("a b c d")}, {toks("a b c d")}) == doctest::Approx(100.0));
  CHECK(bleu4({toks("w x y z q"), toks("one two three four")}, {toks("w x y z q"), toks("one two three four")}) ==
        doctest::Approx(100.0));

  // Zero 4-gram (and 2/3-gram) overlap, short hypothesis: smoothing keeps
  // the score positive; values frozen from the reference scorer.
  const double low = bleu4({toks("a b c d e")}, {toks("a q r s t u v w x y")});
  CHECK(low > 0.0);
  CHECK(low < 5.0);
  CHECK(low == doctest::Approx(bleu_formula({1, 0, 0, 0}, {5, 4, 3, 2}, 5, 10)).epsilon(1e-12));
  CHECK(low == doctest::Approx(3.929752628321626).epsilon(1e-12));

  CHECK(bleu4({toks("a b c d e")}, {toks("a b x d e")}) == doctest::Approx(30.213753973567677).epsilon(1e-12));
  CHECK(bleu4({toks("the cat sat on mat")}, {toks("the cat is on the mat")}) ==
        doctest::Approx(20.80119537801062).epsilon(1e-12));

  // Two-pair corpus: pooled counts, not averaged sentence scores.
  const std::vector<Tokens> hyp{toks("the quick brown fox jumps"), toks("hello there my friend")};
  const std::vector<Tokens> ref{toks("the quick red fox jumps over"), toks("hello my friend")};
  CHECK(bleu4(hyp, ref) == doctest::Approx(22.957488466614336).epsilon(1e-12));
  CHECK(bleu4(hyp, ref) == doctest::Approx(bleu_formula({7, 3, 0, 0}, {9, 7, 5, 3}, 9, 9)).epsilon(1e-12));
  const std::vector<Tokens> hyp_r{hyp[1], hyp[0]}, ref_r{ref[1], ref[0]};
  CHECK(bleu4(hyp_r, ref_r) == bleu4(hyp, ref));

  // Case-sensitive; an order with no n-grams at all gives 0.
  CHECK(bleu4({toks("The Cat sat")}, {toks("the cat sat")}) == 0.0);
  CHECK(bleu4({toks("a b")}, {toks("a b c d")}) == 0.0);

  CHECK_THROWS_AS(bleu4(std::vector<Tokens>{}, std::vector<Tokens>{}), std::invalid_argument);
  CHECK_THROWS_AS(bleu4({toks("a")}, std::vector<Tokens>{}), std::invalid_argument);
}

TEST_CASE("ROUGE values") {
  for (auto v : {RougeVariant::R1, RougeVariant::R2, RougeVariant::RL}) {
    const auto s = rouge(toks("a b c d"), toks("a b c d"), v);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
    const auto z = rouge(toks("a b"), toks("c d"), v);
    CHECK(z.f1 == 0.0);
  }
  const auto l = rouge(toks("a b c d"), toks("a c b d"), RougeVariant::RL);
  CHECK(l.precision == 0.75);
  CHECK(l.recall == 0.75);
  CHECK(l.f1 == 0.75);

  // Frozen from the rouge-score package.
  auto r2 = rouge(toks("x y z x y"), toks("x y x z"), RougeVariant::R2);
  CHECK(r2.precision == doctest::Approx(0.25));
  CHECK(r2.recall == doctest::Approx(0.3333333333333333));
  CHECK(r2.f1 == doctest::Approx(0.28571428571428575));
  auto r1 = rouge(toks("police kill the gunman"), toks("the gunman was shot down by police"), RougeVariant::R1);
  CHECK(r1.f1 == doctest::Approx(0.5454545454545454));
  auto rl = rouge(toks("police kill the gunman"), toks("the gunman was shot down by police"), RougeVariant::RL);
  CHECK(rl.f1 == doctest::Approx(0.36363636363636365));
  CHECK(rouge(toks("the cat sat on the mat"), toks("the cat is on the mat"), RougeVariant::R2).f1 ==
        doctest::Approx(0.6));

  CHECK_THROWS_AS(rouge(Tokens{}, toks("a"), RougeVariant::R1), std::invalid_argument);
  CHECK_THROWS_AS(rouge("", "a", RougeVariant::RL, DefaultTokenizer{}), std::invalid_argument);
}

TEST_CASE("ROUGE-L matches an independent LCS oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    auto draw = [&] {
      Tokens t(1 + rng.uniform_index(12));
      for (auto& x : t) x = std::string(1, static_cast<char>('a' + rng.uniform_index(5)));
      return t;
    };
    const auto h = draw(), r = draw();
    const auto lcs = static_cast<double>(lcs_oracle(h, r));
    CHECK(lcs_length(h, r) == lcs_oracle(h, r));
    const auto s = rouge(h, r, RougeVariant::RL);
    CHECK(s.precision == lcs / static_cast<double>(h.size()));
    CHECK(s.recall == lcs / static_cast<double>(r.size()));
  }
}

TEST_CASE("embed_score") {
  OneHotEmbedder onehot;
  const auto same = embed_score(toks("a b c"), toks("a b c"), onehot);
  CHECK(same.f1 == doctest::Approx(1.0));

  TableEmbedder ortho({{"u", vec({1, 0})}, {"v", vec({0, 1})}});
  const auto zero = embed_score({"u"}, {"v"}, ortho);
  CHECK(zero.precision == 0.0);
  CHECK(zero.recall == 0.0);
  CHECK(zero.f1 == 0.0);

  // Hand table: cos(p,x)=1, cos(p,y)=0.6, cos(q,x)=0, cos(q,y)=0.8,
  // cos(r,x)=-1, cos(r,y)=-0.6.
  TableEmbedder hand({{"p", vec({1, 0})}, {"q", vec({0, 2})}, {"r", vec({-3, 0})},
                      {"x", vec({1, 0})}, {"y", vec({0.6, 0.8})}});
  const auto s = embed_score({"p", "q", "r"}, {"x", "y"}, hand);
  CHECK(s.precision == doctest::Approx((1.0 + 0.8 - 0.6) / 3));
  CHECK(s.recall == doctest::Approx((1.0 + 0.8) / 2));

  TableEmbedder zero_vec({{"z", vec({0, 0})}, {"x", vec({1, 0})}});
  CHECK_THROWS_AS(embed_score({"z"}, {"x"}, zero_vec), std::invalid_argument);
}

TEST_CASE("one-hot embed_score reduces to ROUGE-1 on duplicate-free sequences") {
  Rng rng(3);
  OneHotEmbedder onehot;
  for (int trial = 0; trial < 100; ++trial) {
    auto draw = [&] {
      std::vector<std::string> pool;
      for (int i = 0; i < 15; ++i) pool.push_back("t" + std::to_string(i));
      rng.shuffle(pool);
      pool.resize(1 + rng.uniform_index(10));
      return pool;
    };
    const auto h = draw(), r = draw();
    const auto e = embed_score(h, r, onehot);
    const auto g = rouge(h, r, RougeVariant::R1);
    CHECK(std::abs(e.precision - g.precision) < 1e-9);
    CHECK(std::abs(e.recall - g.recall) < 1e-9);
    CHECK(std::abs(e.f1 - g.f1) < 1e-9);
  }
}

TEST_CASE("language fidelity") {
  const VocabularyAttributor attr({{"aa", {"aa_1", "aa_2", "aa_2."}}, {"bb", {"bb_1", "bb_2."}}});
  WhitespaceTokenizer ws;
  CHECK(language_fidelity({"aa_1 aa_2.", "aa_2"}, "aa", attr, ws) == 1.0);
  CHECK(language_fidelity({"aa_1 bb_1", "bb_2. aa_2."}, "aa", attr, ws) == 0.5);
  CHECK(language_fidelity({""}, "aa", attr, ws) == 0.0);
  CHECK_THROWS_AS(VocabularyAttributor({{"aa", {"x"}}, {"bb", {"x"}}}), std::invalid_argument);

  // Pooled brute count over many random outputs.
  Rng rng(9);
  const std::vector<std::string> words{"aa_1", "aa_2", "aa_2.", "bb_1", "bb_2.", "zz"};
  std::vector<std::string> outputs;
  std::size_t target = 0, known = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> line;
    for (std::size_t k = rng.uniform_index(6); k > 0; --k) {
      const auto& w = words[rng.uniform_index(words.size())];
      line.push_back(w);
      if (w != "zz") ++known;
      if (w.starts_with("aa")) ++target;
    }
    outputs.push_back(text::join(line, " "));
  }
  CHECK(language_fidelity(outputs, "aa", attr, ws) ==
        doctest::Approx(static_cast<double>(target) / static_cast<double>(known)).epsilon(1e-15));

  const ScriptAttributor script({{"hi", {{0x0900, 0x097F}}}, {"en", {{'a', 'z'}, {'A', 'Z'}}}});
  DefaultTokenizer tok;
  CHECK(language_fidelity({"राम went घर"}, "hi", script, tok) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("evaluate and EvalReport") {
  const std::vector<std::string> refs{"a b c d .", "e f g h ."};
  const auto nhg = evaluate(refs, refs, {.task = "NHG", .lang = "en"});
  CHECK_FALSE(nhg.bleu4.has_value());
  CHECK(nhg.rouge1.value() == doctest::Approx(100.0));
  CHECK(nhg.rougeL.value() == doctest::Approx(100.0));
  CHECK(nhg.n_examples == 2);
  CHECK(nhg.to_json().find("\"bleu4\": null") != std::string::npos);

  OneHotEmbedder onehot;
  const auto qg = evaluate(refs, refs, {.task = "QG", .lang = "en", .embedder = &onehot});
  CHECK(qg.bleu4.value() == doctest::Approx(100.0));
  CHECK(qg.embed_f.value() == doctest::Approx(100.0));
  CHECK_FALSE(qg.rouge2.has_value());
  CHECK_THROWS_AS(evaluate(refs, refs, {.task = "QG", .lang = "en"}), std::invalid_argument);

  const auto back = EvalReport::from_json(qg.to_json());
  CHECK(back.to_json() == qg.to_json());

  const auto empty_hyp = evaluate({"", "e f g h ."}, refs, {.task = "ATS", .lang = "en"});
  CHECK(empty_hyp.rougeL.value() == doctest::Approx(50.0));

  CHECK_THROWS_AS(evaluate({"a"}, refs, {.task = "NHG", .lang = "en"}), DataError);
  CHECK_THROWS_AS(evaluate({}, {}, {.task = "NHG", .lang = "en"}), DataError);
  CHECK(metrics_for_task("FSE") == std::set<Metric>{Metric::ROUGE1, Metric::ROUGE2, Metric::ROUGEL});
}

TEST_CASE("evaluate_run over 5000-line files") {
  std::vector<std::string> lines;
  for (int i = 0; i < 5000; ++i) lines.push_back("w" + std::to_string(i % 97) + " x y");
  const auto dir = std::filesystem::temp_directory_path();
  write_lines(dir / "xlgen_hyp.txt", lines);
  write_lines(dir / "xlgen_ref.txt", lines);
  const auto report = evaluate_run(dir / "xlgen_hyp.txt", dir / "xlgen_ref.txt", {.task = "ATS", .lang = "en"});
  CHECK(report.n_examples == 5000);
  CHECK(report.rouge2.value() == doctest::Approx(100.0));
  lines.pop_back();
  write_lines(dir / "xlgen_hyp.txt", lines);
  CHECK_THROWS_AS(evaluate_run(dir / "xlgen_hyp.txt", dir / "xlgen_ref.txt", {.task = "ATS", .lang = "en"}),
                  DataError);
  std::filesystem::remove(dir / "xlgen_hyp.txt");
  std::filesystem::remove(dir / "xlgen_ref.txt");
}
