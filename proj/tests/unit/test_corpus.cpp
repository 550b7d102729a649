#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "xlgen/corpus.hpp"
#include "xlgen/error.hpp"
#include "xlgen/rng.hpp"
#include "xlgen/text.hpp"

using namespace xlgen;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path, std::ios::binary) << contents;
  return path;
}

std::string non_space(std::string_view s) { return text::strip_whitespace(s); }

}  // namespace

TEST_CASE("language tags") {
  const LanguageTag en("en");
  CHECK(en.from_token() == "<fen>");
  CHECK(en.to_token() == "<2en>");
  CHECK_THROWS_AS(LanguageTag(""), std::invalid_argument);
  CHECK_THROWS_AS(LanguageTag("EN"), std::invalid_argument);
  CHECK_THROWS_AS(LanguageTag("abcdefghi"), std::invalid_argument);
  CHECK_NOTHROW(LanguageTag("abcdefg1"));
  CHECK(contains_reserved_token("x <2hi> y"));
  CHECK_FALSE(contains_reserved_token("x < 2hi > y"));
}

TEST_CASE("segment_sentences basic cases") {
  const LanguageTag en("en");
  CHECK(segment_sentences("A b. C d.", en) == std::vector<std::string>{"A b.", "C d."});
  CHECK(segment_sentences("", en).empty());
  CHECK(segment_sentences("  \n ", en).empty());
  CHECK(segment_sentences("Is it? Yes!  Fine", en) == std::vector<std::string>{"Is it?", "Yes!", "Fine"});
  CHECK(segment_sentences("v1.2 is out. ok", en) == std::vector<std::string>{"v1.2 is out.", "ok"});
  // Danda and ideographic full stop.
  CHECK(segment_sentences("राम घर गया। वह सो गया।", LanguageTag("hi")).size() == 2);
  CHECK(segment_sentences("今日は晴れ。明日は雨。", LanguageTag("ja")) ==
        std::vector<std::string>{"今日は晴れ。", "明日は雨。"});
  CHECK_THROWS_AS(segment_sentences("hello <fen> world.", en), DataError);
}

TEST_CASE("segmentation of a 1000-sentence document preserves boundaries and content") {
  Rng rng(5);
  const char* enders[] = {".", "!", "?", "।"};
  std::vector<std::string> truth;
  std::string doc;
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    const auto words = rng.uniform_int(1, 6);
    for (int w = 0; w < words; ++w) {
      if (w) s += ' ';
      s += "w" + std::to_string(rng.uniform_index(100));
    }
    s += enders[rng.uniform_index(4)];
    truth.push_back(s);
    doc += s;
    doc += rng.bernoulli(0.2) ? "\n  " : " ";
  }
  const auto out = segment_sentences(doc, LanguageTag("xx"));
  CHECK(out == truth);
  CHECK(non_space(text::join(out, " ")) == non_space(doc));
}

TEST_CASE("segmentation round trip keeps every non-whitespace character") {
  Rng rng(17);
  const std::vector<std::string> pieces{"a", "bc", ".", "!", "?", " ", "  ", "\t", "。", "।", "x.y", "\n"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string t;
    const auto n = rng.uniform_index(30);
    for (std::size_t i = 0; i < n; ++i) t += pieces[rng.uniform_index(pieces.size())];
    const auto out = segment_sentences(t, LanguageTag("en"));
    for (const auto& s : out) CHECK_FALSE(text::trim(s).empty());
    CHECK(non_space(text::join(out, " ")) == non_space(t));
  }
}

TEST_CASE("load_corpus") {
  const LanguageTag en("en");
  auto three = temp_file("xlgen_c3.txt", "one.\ntwo.\nthree.\n");
  CHECK(load_corpus(three, en).size() == 3);

  auto blanks = temp_file("xlgen_cb.txt", "a.\n\nb.\n   \nc.\n");
  const auto c = load_corpus(blanks, en);
  CHECK(c.sentences() == std::vector<std::string>{"a.", "b.", "c."});

  auto para = temp_file("xlgen_cp.txt", "X. Y.\n");
  CHECK(load_corpus(para, en).sentences() == segment_sentences("X. Y.", en));

  CHECK_THROWS_AS(load_corpus("/nonexistent/xlgen.txt", en), DataError);
  CHECK_THROWS_AS(load_corpus(temp_file("xlgen_ce.txt", "\n \n"), en), DataError);
  CHECK_THROWS_AS(load_corpus(temp_file("xlgen_cr.txt", "a <2en> b.\n"), en), DataError);
  CHECK_THROWS_AS(load_corpus(temp_file("xlgen_cu.txt", std::string("bad \xff byte\n")), en), DataError);
  for (auto name : {"xlgen_c3.txt", "xlgen_cb.txt", "xlgen_cp.txt", "xlgen_ce.txt", "xlgen_cr.txt", "xlgen_cu.txt"}) {
    std::filesystem::remove(std::filesystem::temp_directory_path() / name);
  }
}

TEST_CASE("SentenceCorpus rejects blank sentences") {
  CHECK_THROWS_AS(SentenceCorpus(LanguageTag("en"), {"ok", "  "}, "t"), DataError);
}

TEST_CASE("synthetic corpora are deterministic and disjoint") {
  const SyntheticCorpusSpec spec{50, 100, {4, 9}, 7};
  const auto a1 = generate_synthetic_corpus(LanguageTag("aa"), spec);
  const auto a2 = generate_synthetic_corpus(LanguageTag("aa"), spec);
  CHECK(a1.sentences() == a2.sentences());
  const auto b = generate_synthetic_corpus(LanguageTag("bb"), spec);

  std::set<std::string> ta, tb;
  for (const auto& s : a1.sentences()) for (auto& t : text::split_whitespace(s)) ta.insert(t);
  for (const auto& s : b.sentences()) for (auto& t : text::split_whitespace(s)) tb.insert(t);
  for (const auto& t : ta) CHECK_FALSE(tb.contains(t));

  const auto vocab = synthetic_vocabulary(LanguageTag("aa"), 50);
  const std::set<std::string> allowed(vocab.begin(), vocab.end());
  for (const auto& t : ta) CHECK(allowed.contains(t));

  CHECK_THROWS_AS(generate_synthetic_corpus(LanguageTag("aa"), {9, 10, {1, 2}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic_corpus(LanguageTag("aa"), {10, 10, {3, 2}, 0}), std::invalid_argument);
}

TEST_CASE("synthetic sentence lengths are uniform") {
  const auto c = generate_synthetic_corpus(LanguageTag("aa"), {50, 10000, {4, 9}, 3});
  std::map<std::size_t, int> freq;
  for (const auto& s : c.sentences()) ++freq[text::split_whitespace(s).size()];
  const double n = 10000, p = 1.0 / 6.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  CHECK(freq.size() == 6);
  for (std::size_t len = 4; len <= 9; ++len) {
    INFO("length " << len << " count " << freq[len]);
    CHECK(std::abs(freq[len] - n * p) < 3 * sigma);
  }
}
