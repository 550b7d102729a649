#include "xlgen/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace xlgen::eval {

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t n = 0; n < 4; ++n) {
    correct[n] += other.correct[n];
    total[n] += other.total[n];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t clipped_overlap(const Tokens& hyp, const Tokens& ref, std::size_t n) {
  const auto h = ngram_counts(hyp, n);
  const auto r = ngram_counts(ref, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : h) {
    auto it = r.find(gram);
    if (it != r.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

}  // namespace

BleuStats bleu_stats(const Tokens& hypothesis, const Tokens& reference) {
  BleuStats s;
  s.hyp_len = hypothesis.size();
  s.ref_len = reference.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    s.correct[n - 1] = clipped_overlap(hypothesis, reference, n);
    s.total[n - 1] = hypothesis.size() >= n ? hypothesis.size() - n + 1 : 0;
  }
  return s;
}

double bleu_from_stats(const BleuStats& stats) {
  if (stats.hyp_len == 0) return 0.0;
  // log(0) stand-in used by the reference scorer, so that a missing order
  // drives the score to zero instead of producing -inf.
  constexpr double kLogZero = -9999999999.0;
  std::array<double, 4> precision{};
  double smooth = 1.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (stats.total[n] == 0) break;
    if (stats.correct[n] == 0) {
      smooth *= 2.0;
      precision[n] = 100.0 / (smooth * static_cast<double>(stats.total[n]));
    } else {
      precision[n] = 100.0 * static_cast<double>(stats.correct[n]) / static_cast<double>(stats.total[n]);
    }
  }
  double log_sum = 0.0;
  for (double p : precision) log_sum += p > 0.0 ? std::log(p) : kLogZero;
  const auto c = static_cast<double>(stats.hyp_len);
  const auto r = static_cast<double>(stats.ref_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / 4.0);
}

double bleu4(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
  if (hypotheses.size() != references.size()) throw std::invalid_argument("bleu4: corpus length mismatch");
  if (hypotheses.empty()) throw std::invalid_argument("bleu4: empty corpus");
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += bleu_stats(hypotheses[i], references[i]);
  return bleu_from_stats(total);
}

double bleu4(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
             const EvalTokenizer& tokenizer) {
  std::vector<Tokens> h, r;
  for (const auto& s : hypotheses) h.push_back(tokenizer.tokenize(s));
  for (const auto& s : references) r.push_back(tokenizer.tokenize(s));
  return bleu4(h, r);
}

PRF make_prf(double precision, double recall) {
  const double sum = precision + recall;
  return {precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PRF rouge(const Tokens& hypothesis, const Tokens& reference, RougeVariant variant) {
  if (hypothesis.empty() || reference.empty()) throw std::invalid_argument("rouge: empty token sequence");
  if (variant == RougeVariant::RL) {
    const auto lcs = static_cast<double>(lcs_length(hypothesis, reference));
    return make_prf(lcs / static_cast<double>(hypothesis.size()),
                    lcs / static_cast<double>(reference.size()));
  }
  const std::size_t n = variant == RougeVariant::R1 ? 1 : 2;
  const auto overlap = static_cast<double>(clipped_overlap(hypothesis, reference, n));
  const std::size_t hyp_grams = hypothesis.size() >= n ? hypothesis.size() - n + 1 : 0;
  const std::size_t ref_grams = reference.size() >= n ? reference.size() - n + 1 : 0;
  return make_prf(hyp_grams ? overlap / static_cast<double>(hyp_grams) : 0.0,
                  ref_grams ? overlap / static_cast<double>(ref_grams) : 0.0);
}

PRF rouge(const std::string& hypothesis, const std::string& reference, RougeVariant variant,
          const EvalTokenizer& tokenizer) {
  return rouge(tokenizer.tokenize(hypothesis), tokenizer.tokenize(reference), variant);
}

PRF embed_score(const Tokens& hypothesis, const Tokens& reference, const TokenEmbedder& embedder) {
  if (hypothesis.empty() || reference.empty()) throw std::invalid_argument("embed_score: empty token sequence");
  auto unit = [&](const std::string& token) {
    ColVector v = embedder.embed(token);
    const double norm = v.norm();
    if (!(norm > 0.0)) throw std::invalid_argument("embed_score: zero-norm embedding for '" + token + "'");
    return ColVector(v / norm);
  };
  std::vector<ColVector> h, r;
  for (const auto& t : hypothesis) h.push_back(unit(t));
  for (const auto& t : reference) r.push_back(unit(t));
  Matrix sim(static_cast<Eigen::Index>(h.size()), static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::clamp(h[i].dot(r[j]), -1.0, 1.0);
    }
  }
  const double precision = sim.rowwise().maxCoeff().mean();
  const double recall = sim.colwise().maxCoeff().mean();
  return make_prf(precision, recall);
}

}  // namespace xlgen::eval
