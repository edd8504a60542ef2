#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ivmono {

//! Worker count: IVMONO_THREADS if set to a positive integer, else the
//! hardware concurrency.
inline std::size_t
thread_count()
{
  if (const char* env = std::getenv("IVMONO_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0)
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

//! Calls fn(i) for i in [0, n) over contiguous blocks. The first exception
//! thrown by any block is rethrown after all workers finish.
template<class Fn>
void
parallel_for(std::size_t n, Fn&& fn)
{
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      try {
        for (std::size_t i = begin; i < end; ++i)
          fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool)
    th.join();
  for (auto& e : errors) {
    if (e)
      std::rethrow_exception(e);
  }
}

} // namespace ivmono
