#include "xlgen/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace xlgen {

namespace {

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
};

void validate(const BeamOptions& options) {
  if (options.beam_size == 0) throw std::invalid_argument("beam_size must be >= 1");
  if (options.max_len == 0) throw std::invalid_argument("max_len must be >= 1");
}

Matrix scored(const StepScorer& scorer, const std::vector<std::vector<TokenId>>& prefixes,
              const BeamOptions& options) {
  Matrix lp = scorer.next_log_probs(prefixes);
  for (TokenId b : options.banned) {
    if (b >= 0 && b < lp.cols()) lp.col(b).setConstant(-std::numeric_limits<double>::infinity());
  }
  return lp;
}

double normalized(const Hypothesis& h, double penalty) {
  if (penalty == 0.0) return h.score;
  return h.score / std::pow(static_cast<double>(std::max<std::size_t>(h.tokens.size(), 1)), penalty);
}

}  // namespace

Hypothesis beam_search(const StepScorer& scorer, TokenId start, const BeamOptions& options) {
  validate(options);
  const std::size_t beam = options.beam_size;
  std::vector<Hypothesis> alive{Hypothesis{}};
  std::vector<Hypothesis> finished;

  for (std::size_t step = 1; step <= options.max_len && !alive.empty(); ++step) {
    std::vector<std::vector<TokenId>> prefixes;
    prefixes.reserve(alive.size());
    for (const auto& h : alive) {
      std::vector<TokenId> p{start};
      p.insert(p.end(), h.tokens.begin(), h.tokens.end());
      prefixes.push_back(std::move(p));
    }
    const Matrix lp = scored(scorer, prefixes, options);

    std::vector<Candidate> candidates;
    candidates.reserve(alive.size() * static_cast<std::size_t>(lp.cols()));
    for (std::size_t i = 0; i < alive.size(); ++i) {
      for (Eigen::Index v = 0; v < lp.cols(); ++v) {
        const double s = lp(static_cast<Eigen::Index>(i), v);
        if (std::isinf(s)) continue;
        candidates.push_back({i, static_cast<TokenId>(v), alive[i].score + s});
      }
    }
    const std::size_t keep = std::min(candidates.size(), 2 * beam);
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });

    std::vector<Hypothesis> next;
    for (std::size_t r = 0; r < keep; ++r) {
      const auto& c = candidates[r];
      Hypothesis h{alive[c.parent].tokens, c.score};
      h.tokens.push_back(c.token);
      const bool done = c.token == options.eos || step == options.max_len;
      if (done) {
        if (r < beam) finished.push_back(std::move(h));
      } else if (next.size() < beam) {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);

    // Scores only decrease as hypotheses grow, so without length
    // normalization no alive hypothesis can overtake a better finished one.
    if (options.length_penalty == 0.0 && finished.size() >= beam && !alive.empty()) {
      double best_finished = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best_finished = std::max(best_finished, f.score);
      if (best_finished >= alive.front().score) break;
    }
  }

  if (finished.empty()) {
    // Every candidate was banned; fall back to the best alive prefix.
    if (alive.empty()) return Hypothesis{};
    finished = std::move(alive);
  }
  const auto best = std::max_element(
      finished.begin(), finished.end(), [&](const Hypothesis& a, const Hypothesis& b) {
        return normalized(a, options.length_penalty) < normalized(b, options.length_penalty);
      });
  return *best;
}

Hypothesis greedy_search(const StepScorer& scorer, TokenId start, const BeamOptions& options) {
  validate(options);
  Hypothesis h;
  std::vector<TokenId> prefix{start};
  for (std::size_t step = 1; step <= options.max_len; ++step) {
    const Matrix lp = scored(scorer, {prefix}, options);
    Eigen::Index best = 0;
    const double score = lp.row(0).maxCoeff(&best);
    if (std::isinf(score)) break;
    h.score += score;
    h.tokens.push_back(static_cast<TokenId>(best));
    prefix.push_back(static_cast<TokenId>(best));
    if (best == options.eos) break;
  }
  return h;
}

ModelScorer::ModelScorer(const Seq2SeqModel& model, std::span<const TokenId> source)
    : model_(model), encoded_(model.encode(source)) {}

Matrix ModelScorer::next_log_probs(const std::vector<std::vector<TokenId>>& prefixes) const {
  return model_.next_token_log_probs(encoded_, prefixes);
}

std::vector<TokenId> non_generable_tokens(const Vocabulary& vocab) {
  std::vector<TokenId> out{Vocabulary::kPad, Vocabulary::kUnk, Vocabulary::kMask};
  for (TokenId id = 0; id < static_cast<TokenId>(vocab.size()); ++id) {
    if (vocab.is_tag(id)) out.push_back(id);
  }
  return out;
}

Hypothesis generate(const Seq2SeqModel& model, const TaggedSequence& source,
                    const BeamOptions& options) {
  ModelScorer scorer(model, source.tokens);
  return beam_search(scorer, source.decoder_start(), options);
}

}  // namespace xlgen
