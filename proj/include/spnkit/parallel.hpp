#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace spnkit {

/// Worker count: explicit value, else the SPNKIT_JOBS environment variable,
/// else the number of logical cores.
inline int resolve_jobs(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPNKIT_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(0..count-1) across `jobs` threads in contiguous chunks. Callers
/// write results into pre-sized storage by index, so output order never
/// depends on scheduling. The first exception thrown by any worker is
/// rethrown on the calling thread.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      const std::size_t lo = count * w / workers;
      const std::size_t hi = count * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace spnkit
