#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace urysohn {

namespace detail {
inline std::atomic<unsigned>& thread_cap_storage() {
  static std::atomic<unsigned> cap{0};
  return cap;
}
}  // namespace detail

/// Caps the number of worker threads used by the library (0 = hardware).
inline void set_max_threads(unsigned n) { detail::thread_cap_storage() = n; }

inline unsigned max_threads() {
  unsigned cap = detail::thread_cap_storage();
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

namespace detail {

// Splits [0, n) into contiguous chunks and runs fn(chunk, begin, end) on each,
// possibly concurrently. Chunk boundaries depend only on n and the worker
// count, and callers reduce per-chunk results in chunk order, so results do
// not depend on scheduling.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t min_work, Fn&& fn) {
  const std::size_t workers =
      n < min_work ? 1 : std::min<std::size_t>(max_threads(), n);
  if (workers <= 1) {
    if (n > 0) fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  const std::size_t step = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t c = 0; c < workers; ++c) {
      const std::size_t begin = c * step;
      const std::size_t end = std::min(n, begin + step);
      if (begin >= end) break;
      pool.emplace_back([&fn, &errors, c, begin, end] {
        try {
          fn(c, begin, end);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  // rethrow the error of the lowest chunk so the reported failure is deterministic
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::size_t chunk_count(std::size_t n, std::size_t min_work) {
  if (n < min_work) return n > 0 ? 1 : 0;
  const std::size_t workers = std::min<std::size_t>(max_threads(), n);
  const std::size_t step = (n + workers - 1) / workers;
  return (n + step - 1) / step;
}

}  // namespace detail
}  // namespace urysohn
