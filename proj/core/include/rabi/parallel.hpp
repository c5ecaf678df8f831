#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace rabi {

/// Runs body(i) for i in [0, count) on a small thread pool. Each index owns
/// its output slot and derives its own RNG stream, so the merged result does
/// not depend on scheduling.
inline void parallel_for(int count, const std::function<void(int)>& body) {
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers =
      std::max(1, std::min<int>(static_cast<int>(hw ? hw : 2), count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rabi
