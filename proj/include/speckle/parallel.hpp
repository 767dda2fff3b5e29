#pragma once

#include <cstddef>
#include <thread>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace speckle {

/// Number of hardware threads, never less than one.
inline int hardware_threads() noexcept {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Run fn(row) for every row in [0, rows). Rows are independent; with
/// threads > 1 they are distributed statically over an OpenMP team. Callers
/// must not perform cross-row reductions inside fn, which keeps the result
/// bit-identical to the sequential loop.
template <class Fn>
void parallel_rows(std::size_t rows, int threads, Fn&& fn) {
#if defined(_OPENMP)
  if (threads > 1 && rows > 1) {
    const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t r = 0; r < n; ++r) fn(static_cast<std::size_t>(r));
    return;
  }
#endif
  for (std::size_t r = 0; r < rows; ++r) fn(r);
}

}  // namespace speckle
