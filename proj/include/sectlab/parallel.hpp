#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sectlab {

namespace detail {
inline std::atomic<std::size_t>& worker_count_storage() {
  static std::atomic<std::size_t> workers{1};
  return workers;
}
inline thread_local bool in_worker = false;
}  // namespace detail

/// Number of threads used by parallel loops. Results never depend on it.
inline std::size_t worker_count() { return detail::worker_count_storage().load(); }
inline void set_worker_count(std::size_t workers) {
  detail::worker_count_storage().store(std::max<std::size_t>(1, workers));
}

/// Calls body(i) for i in [0, count). Nested calls from a worker run inline.
/// The body must only write to slots owned by index i.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1 || detail::in_worker) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    detail::in_worker = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
    detail::in_worker = false;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sectlab
