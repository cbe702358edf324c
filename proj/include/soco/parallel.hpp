#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace soco {

/// Runs body(i) for i in [0, n) on `workers` OpenMP threads. The first
/// exception thrown by any iteration is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for num_threads(workers) schedule(dynamic, 8)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace soco
