#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace graphleak {

// Work pool handle threaded through every parallel stage. Work items are
// indexed; each item writes only its own output slot and derives its own RNG
// stream, so results do not depend on the number of jobs.
class Executor {
 public:
  Executor() = default;
  explicit Executor(std::size_t jobs) : jobs_(std::max<std::size_t>(1, jobs)) {}

  static Executor hardware() {
    return Executor(std::max(1u, std::thread::hardware_concurrency()));
  }

  std::size_t jobs() const noexcept { return jobs_; }

  template <typename Fn>
  void parallel_for(std::size_t count, Fn&& fn) const {
    if (count == 0) return;
    const std::size_t workers = std::min(jobs_, count);
    if (workers <= 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count, std::memory_order_relaxed);
          return;
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers - 1);
      for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
      body();
    }
    if (error) std::rethrow_exception(error);
  }

  template <typename T, typename Fn>
  std::vector<T> map(std::size_t count, Fn&& fn) const {
    std::vector<T> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = fn(i); });
    return out;
  }

 private:
  std::size_t jobs_ = 1;
};

}  // namespace graphleak
