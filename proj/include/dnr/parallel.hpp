#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dnr {

// Indexed parallel map: out[i] = fn(i). Each slot is written by exactly one
// task, so the result is independent of scheduling and worker count.
// workers <= 1 runs inline on the calling thread.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, unsigned workers, Fn&& fn) {
  std::vector<T> out(n);
  if (n == 0) return out;
  std::size_t thread_count = workers == 0 ? 1 : workers;
  if (thread_count > n) thread_count = n;
  if (thread_count <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(thread_count);
  for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  parallel_map<char>(n, workers, [&](std::size_t i) {
    fn(i);
    return char(0);
  });
}

}  // namespace dnr
