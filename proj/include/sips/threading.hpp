#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace sips {

/// Worker count: SIPS_THREADS if set (0 = auto), otherwise all hardware
/// threads.
inline int resolve_threads() {
  int n = 0;
  if (const char* env = std::getenv("SIPS_THREADS")) {
    n = std::atoi(env);
    if (n < 0) n = 0;
  }
  if (n == 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (n == 0) n = 1;
  }
  return n;
}

/// Runs fn(begin, end) over a partition of [0, n). Results must be written
/// to disjoint, index-addressed storage so the outcome is independent of the
/// partitioning. The lowest-chunk exception, if any, is rethrown.
inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  const int workers = resolve_threads();
  if (workers <= 1 || n < 2) {
    fn(0, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(chunks);
  pool.reserve(chunks);
  const std::size_t base = n / chunks;
  const std::size_t rem = n % chunks;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t end = begin + base + (c < rem ? 1 : 0);
    pool.emplace_back([&fn, &errors, c, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace sips
