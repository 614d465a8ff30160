#ifndef TORDIFF_DETAIL_PARALLEL_HPP_
#define TORDIFF_DETAIL_PARALLEL_HPP_

#include <cstddef>
#include <exception>
#include <mutex>

#include "tordiff/exec.hpp"

namespace tordiff::detail {

/// Runs f(i) for i in [0, n). Iterations must be independent. The first exception
/// thrown by any iteration is rethrown after the loop.
template <class F>
void for_range(Exec exec, std::size_t n, F&& f) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      const std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace tordiff::detail

#endif  // TORDIFF_DETAIL_PARALLEL_HPP_
