#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace qsgan {

// worker cap: hardware concurrency, lowered by QPROGAN_THREADS when set
inline int thread_limit() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("QPROGAN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && static_cast<unsigned long>(v) < hw) hw = static_cast<unsigned>(v);
  }
  return static_cast<int>(hw);
}

// fn(i) must write only to slot i; results are then order-independent
inline void parallel_for(long long n, const std::function<void(long long)>& fn) {
  const long long threads = std::min<long long>(thread_limit(), n);
  if (threads <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (long long t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const long long i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace qsgan
