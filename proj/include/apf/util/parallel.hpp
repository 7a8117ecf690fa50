#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace apf::util {

/// Number of workers to use when the caller asked for `requested` (0 = one per processor).
inline unsigned resolve_jobs(unsigned requested) {
  if (requested > 0)
    return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Items are handed out
/// in index order. If any call throws, remaining items are skipped and the
/// exception from the lowest failing index is rethrown after all workers stop.
template <typename Fn> void parallel_for(std::size_t n, unsigned jobs, Fn &&fn) {
  const std::size_t workers = std::min<std::size_t>(resolve_jobs(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t error_index = n;
  std::exception_ptr error;
  auto work = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed))
        return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n)
        return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back(work);
  for (auto &t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace apf::util
