#ifndef ALSET_PARALLEL_HPP
#define ALSET_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace alset
{

/**
 * Calls fn(i) for i in [0, n) on up to `jobs` worker threads. Work items
 * are claimed in index order; each must only touch state it owns. The
 * first exception thrown by any item is rethrown after all workers join.
 */
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn)
{
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1)
  {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;)
    {
      const std::size_t i = next.fetch_add(1);
      if (i >= n)
        return;
      try
      {
        fn(i);
      }
      catch (...)
      {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back(worker);
  for (auto& t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace alset

#endif
