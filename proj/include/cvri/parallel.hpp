#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cvri {

// Runs fn(i) for i in [0, count) across up to n_threads workers. Work items
// must be independent; callers that need a deterministic result reduce the
// per-item outputs in index order afterwards. The first worker exception is
// rethrown on the calling thread after all workers have joined.
template <class Fn>
void parallel_for(long count, Fn&& fn, int n_threads = 0) {
  if (count <= 0) return;
  long threads = n_threads > 0 ? n_threads : static_cast<long>(std::thread::hardware_concurrency());
  threads = std::max<long>(1, std::min<long>(threads, count));
  if (threads == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next(0);
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (long t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

} // namespace cvri
