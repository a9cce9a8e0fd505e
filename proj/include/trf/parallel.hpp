#ifndef TRF_PARALLEL_HPP
#define TRF_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace trf {

// Worker count from TRF_THREADS (default 1, minimum 1).
int configured_threads();

// Runs fn(0..n_tasks-1) on up to `threads` workers. The first exception
// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& fn,
                  int threads);

}  // namespace trf

#endif  // TRF_PARALLEL_HPP
