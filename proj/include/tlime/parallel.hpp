#ifndef TLIME_PARALLEL_HPP
#define TLIME_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tlime {

/// Runs f(i) for i in [0, n) on up to num_threads workers (0 = hardware
/// concurrency). Work is split into contiguous index ranges; callers must
/// write only to per-index slots, which keeps results order-independent.
template <typename F>
void parallel_for(std::size_t n, unsigned num_threads, F&& f) {
  if (n == 0) return;
  unsigned workers = num_threads == 0
                         ? std::max(1u, std::thread::hardware_concurrency())
                         : num_threads;
  if (workers > n) workers = static_cast<unsigned>(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }

  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tlime

#endif  // TLIME_PARALLEL_HPP
