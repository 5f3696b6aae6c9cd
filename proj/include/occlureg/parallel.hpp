#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace occlureg {

/// Worker count: OCCLUREG_THREADS caps it when set, otherwise the hardware
/// concurrency is used.
inline int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("OCCLUREG_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
  }
  return static_cast<int>(hw);
}

/// Runs fn(begin, end) over a partition of [0, n). Falls back to a single
/// inline call when one worker suffices. fn must not touch shared mutable
/// state outside its own range.
inline void parallel_for(long n, const std::function<void(long, long)>& fn) {
  if (n <= 0) return;
  const long workers = std::min<long>(worker_count(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const long chunk = (n + workers - 1) / workers;
  for (long w = 0; w < workers; ++w) {
    const long begin = w * chunk;
    const long end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace occlureg
