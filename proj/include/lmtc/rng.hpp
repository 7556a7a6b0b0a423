// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lmtc/types.hpp"

namespace lmtc {

// SplitMix64 generator. Behaves identically on every platform, which the
// std::uniform_*_distribution adapters do not guarantee.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Inclusive bounds.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(next_u64() %
                                     static_cast<uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return next_unit() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i - 1)));
      std::swap(v[i - 1], v[j]);
    }
  }

  Matrix uniform_matrix(Index rows, Index cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

  // Independent stream derived from (seed, stream_id). Used wherever draws
  // must not depend on thread scheduling or call order across components.
  static Rng stream(uint64_t seed, uint64_t stream_id) {
    Rng mix(seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
    mix.next_u64();
    return Rng(mix.next_u64());
  }

 private:
  uint64_t state_;
};

}  // namespace lmtc
