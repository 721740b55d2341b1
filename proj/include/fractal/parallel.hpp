#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fractal {

/// Worker cap: FRACTAL_THREADS if set and positive, else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("FRACTAL_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(chunk) for chunk = 0 .. chunks-1 on up to `threads` workers and
/// returns the results in chunk order, so any reduction over them is
/// independent of the worker count.
template <class Result, class Fn>
std::vector<Result> parallel_chunks(int chunks, int threads, Fn fn) {
  std::vector<Result> out(chunks);
  threads = std::max(1, std::min(threads, chunks));
  if (threads == 1) {
    for (int c = 0; c < chunks; ++c) out[c] = fn(c);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex guard;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int c = t; c < chunks; c += threads) out[c] = fn(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace fractal
