#ifndef QSLRAND_PARALLEL_HPP
#define QSLRAND_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qslrand {

/// Environment variable that overrides the thread count when the caller asks for "auto" (0).
inline constexpr const char *threads_env_var = "QSLRAND_THREADS";

/// Resolves a requested thread count; 0 means "auto" (env override, else hardware).
inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0)
    return requested;
  if (const char *env = std::getenv(threads_env_var)) {
    try {
      const long v = std::stol(env);
      if (v > 0)
        return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `threads` workers pulling indices
/// from a shared counter. The first exception thrown by any body is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body &&body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n)
        return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const auto count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::jthread> pool;
  pool.reserve(count - 1);
  for (unsigned t = 1; t < count; ++t)
    pool.emplace_back(worker);
  worker();
  pool.clear();
  if (error)
    std::rethrow_exception(error);
}

} // namespace qslrand

#endif // QSLRAND_PARALLEL_HPP
