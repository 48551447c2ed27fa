#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace fedff {

// Runs fn(0..n-1) on up to `workers` threads and joins. Tasks must be
// independent; with workers <= 1 the loop stays on the calling thread, which
// keeps single-threaded runs trivially deterministic.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> threads;
  const int count = std::min(workers, n);
  threads.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
}

}  // namespace fedff
