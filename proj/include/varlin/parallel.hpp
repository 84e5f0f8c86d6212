#ifndef VARLIN_PARALLEL_HPP
#define VARLIN_PARALLEL_HPP

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace varlin {

// Runs fn(i) for i in [0, count).  Each work item writes only to its own
// output slot, so results are independent of the thread count and of the
// scheduling order.  Reductions over the slots must be done sequentially
// by the caller.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int nt = std::min<std::size_t>(threads, count);
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace varlin

#endif
