#pragma once

// Index-parallel loops capped by the CONJURY_THREADS environment variable.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "conjury/codes.hpp"

namespace conjury {

/// CONJURY_THREADS if set (integer >= 1), otherwise 1.
inline int thread_count() {
  const char* env = std::getenv("CONJURY_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ValidationError("CONJURY_THREADS must be an integer >= 1");
  return static_cast<int>(std::min<long>(v, 256));
}

/// Calls fn(i) for i in [0, n); the first exception is rethrown.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const int threads = std::min(thread_count(), std::max(n, 1));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += threads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace conjury
