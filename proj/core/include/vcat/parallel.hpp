#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vcat {

/// Number of workers to use when the caller passes 0.
inline unsigned default_jobs() {
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index is
/// visited exactly once; callers write results into slot i so that the
/// reduction order never depends on the schedule. The exception raised by
/// the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  if (jobs == 0) jobs = default_jobs();
  const std::size_t workers = std::min<std::size_t>(jobs, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace vcat
