// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

#include "lmtc/types.hpp"

namespace lmtc {

// Runs fn on contiguous chunks of [0, n). fn must be safe to run concurrently
// on disjoint ranges. n_threads <= 0 picks the hardware concurrency.
inline void parallel_for(Index n, int n_threads,
                         const std::function<void(Index, Index)>& fn) {
  if (n <= 0) return;
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = static_cast<int>(std::min<Index>(n_threads, n));
  if (n_threads == 1) {
    fn(0, n);
    return;
  }
  const Index chunk = (n + n_threads - 1) / n_threads;
  std::vector<std::thread> workers;
  for (int t = 0; t < n_threads; ++t) {
    const Index begin = t * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back(fn, begin, end);
  }
  for (auto& w : workers) w.join();
}

}  // namespace lmtc
