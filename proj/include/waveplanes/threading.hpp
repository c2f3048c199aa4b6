#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace wvpl {

/// Worker count resolution: explicit value > WAVEPLANE_THREADS > hardware.
inline int default_workers() {
  if (const char* env = std::getenv("WAVEPLANE_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Splits [0, n) into one contiguous chunk per worker and runs
/// fn(begin, end, worker_index). Chunk boundaries depend only on (n, workers),
/// so per-chunk results can be reduced in worker order deterministically.
template <typename Fn>
void parallel_chunks(int n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers <= 1) {
    if (n > 0) fn(0, n, 0);
    return;
  }
  const int base = n / workers, extra = n % workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int begin = 0;
  for (int w = 0; w < workers; ++w) {
    const int len = base + (w < extra ? 1 : 0);
    const int end = begin + len;
    pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
    begin = end;
  }
  for (auto& t : pool) t.join();
}

}  // namespace wvpl
