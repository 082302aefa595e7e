#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace asmpm {

// Worker cap: min(hardware, AS_DIFFMPM_THREADS).  Unset/invalid -> hardware.
inline int thread_cap() {
  static int cap = [] {
    int hw = int(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("AS_DIFFMPM_THREADS")) {
      int req = std::atoi(env);
      if (req >= 1) hw = std::min(hw, req);
    }
    return hw;
  }();
  return cap;
}

// Static block partition over [0, n).  Only used for loops whose iterations
// write disjoint slots: results are bit-identical for any worker count.
template <class F>
void parallel_for(int n, F&& body) {
  int workers = std::min(thread_cap(), n);
  if (workers <= 1 || n < 256) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace asmpm
