#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "scalesn/types.hpp"

namespace scalesn {

inline Index default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<Index>(hw);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written into caller-owned slots indexed by i, which keeps the aggregate
/// independent of scheduling. The lowest-index exception is rethrown.
template <class Fn>
void parallel_for_index(Index n, Index threads, Fn&& fn) {
  if (n <= 0) return;
  threads = std::min(std::max<Index>(threads, 1), n);
  if (threads == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (Index t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const Index i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace scalesn
