#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace kgalign {

/// Static range partitioning over [begin, end). Deterministic for any thread
/// count as long as each index writes only its own outputs.
template <typename Body>
void parallel_for(std::int64_t begin, std::int64_t end, int threads, Body&& body) {
  const std::int64_t n = end - begin;
  if (n <= 0) return;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), n));
  if (threads == 1) {
    body(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = begin + t * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace kgalign
