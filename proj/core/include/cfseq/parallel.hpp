#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cfseq {

/// Splits an index range over a fixed number of worker threads.
/// Work items must not share mutable state; results therefore do not
/// depend on the thread count.
class Executor {
 public:
  explicit Executor(std::size_t threads = 1) : threads_(std::max<std::size_t>(threads, 1)) {}

  [[nodiscard]] std::size_t threads() const noexcept { return threads_; }

  template <class F>
  void for_each(std::size_t count, F&& fn) const {
    const std::size_t workers = std::min(threads_, count);
    if (workers <= 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t begin = count * w / workers;
        const std::size_t end = count * (w + 1) / workers;
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

 private:
  std::size_t threads_;
};

}  // namespace cfseq
