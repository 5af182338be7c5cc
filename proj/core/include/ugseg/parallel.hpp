#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace ugseg {

/// Per-thread worker-count setting consumed by batch-level loops.
/// Work items always write to disjoint buffers and any reduction runs in
/// fixed index order afterward, so results are bitwise identical for every
/// thread count.
class Workers {
 public:
  static int count() { return count_; }
  static void set_count(int n) { count_ = n < 1 ? 1 : n; }

 private:
  static thread_local int count_;
};
inline thread_local int Workers::count_ = 1;

/// Runs fn(i) for i in [0, n) on up to Workers::count() threads with static
/// contiguous chunking. fn must only touch state owned by item i.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  const int workers = Workers::count();
  if (workers <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::int64_t chunks = std::min<std::int64_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(chunks));
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t lo = c * n / chunks;
    const std::int64_t hi = (c + 1) * n / chunks;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ugseg
