#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lsa {

/// Worker-count handle passed down from the CLI. Work items are identified by
/// index and write to index-addressed slots, so results never depend on the
/// number of workers.
struct Parallelism {
  unsigned workers = 1;

  static Parallelism hardware() {
    return {std::max(1u, std::thread::hardware_concurrency())};
  }
};

/// Runs fn(i) for i in [0, count) on up to `par.workers` threads. The first
/// exception thrown by any item is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t count, const Parallelism& par, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, par.workers), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
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
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lsa
