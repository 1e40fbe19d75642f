#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace radscat::tools {

// Static partition of [0, n) over `jobs` threads. Callers store results by
// index, so output order does not depend on scheduling.
template <class F>
void parallel_for(size_t n, int jobs, F&& f) {
  const size_t nt = std::clamp<size_t>(size_t(std::max(jobs, 1)), 1, std::max<size_t>(n, 1));
  if (nt == 1) {
    for (size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  for (size_t t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      try {
        for (size_t i = t; i < n; i += nt) f(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace radscat::tools
