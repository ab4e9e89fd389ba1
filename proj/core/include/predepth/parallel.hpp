#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace predepth {

inline int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Static block partition of [0,n). Each index is visited exactly once and
// workers only write to disjoint preallocated slots, so results do not
// depend on scheduling.
inline void parallel_for(std::int64_t n, int jobs,
                         const std::function<void(std::int64_t)>& fn) {
  jobs = resolve_jobs(jobs);
  if (jobs <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (jobs > n) jobs = static_cast<int>(n);
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&, t] {
      std::int64_t lo = n * t / jobs;
      std::int64_t hi = n * (t + 1) / jobs;
      try {
        for (std::int64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errs[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace predepth
