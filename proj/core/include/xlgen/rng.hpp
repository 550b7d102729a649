#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace xlgen {

// Seeded random source. The engine is std::mt19937_64 (fully specified by
// the standard); the distributions are implemented here so that generated
// data and trained checkpoints are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform();

  double normal(double mean = 0.0, double stddev = 1.0);

  std::int64_t poisson(double lambda);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  // Seed of an independent sub-stream, e.g. derive(seed, worker_index).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view bytes);

}  // namespace xlgen
