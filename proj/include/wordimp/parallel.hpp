#pragma once

#include <thread>
#include <vector>

namespace wordimp {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index owns its
/// output slot, so results are identical regardless of worker count.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  int num = std::min(jobs, n);
  for (int w = 0; w < num; ++w)
    workers.emplace_back([&fn, w, n, num] {
      for (int i = w; i < n; i += num) fn(i);
    });
  for (auto& t : workers) t.join();
}

}  // namespace wordimp
