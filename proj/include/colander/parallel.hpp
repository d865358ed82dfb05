#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace colander {

// Worker count: COLANDER_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("COLANDER_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(begin, end, chunk) over [0, n) split into contiguous chunks, one
// per worker. Chunk boundaries depend on the worker count, so callers must
// only merge order-independent results (integer counters) or index results
// by item.
template <class Body>
void parallel_chunks(std::size_t n, Body&& body, unsigned workers = thread_count()) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    body(std::size_t{0}, n, 0u);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([&, lo, hi, w] {
      try {
        body(lo, hi, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Evaluates f(i) for every i in [0, n) and returns the results in index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f, unsigned workers = thread_count()) {
  std::vector<T> out(n);
  parallel_chunks(
      n,
      [&](std::size_t lo, std::size_t hi, unsigned) {
        for (std::size_t i = lo; i < hi; ++i) out[i] = f(i);
      },
      workers);
  return out;
}

}  // namespace colander
