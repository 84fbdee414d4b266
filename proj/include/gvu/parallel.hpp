#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gvu {

// Worker-pool cap shared by all parallel loops; 0 means "library default".
void set_thread_cap(int threads);
int thread_cap();

// Serial reference for replica loops. Kept deliberately: the parallel path
// must produce byte-identical aggregates, and tests compare against this.
template <class Fn>
void replica_for_serial(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

// OpenMP replica loop. Each body invocation must touch only state owned by
// its index (derived rng stream, preallocated result slot); any reduction
// happens serially afterwards, so results are independent of thread count.
template <class Fn>
void replica_for(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
  const int cap = thread_cap();
  if (cap == 1) {
    replica_for_serial(n, fn);
    return;
  }
  const long long m = static_cast<long long>(n);
  if (cap > 0) {
#pragma omp parallel for schedule(static) num_threads(cap)
    for (long long i = 0; i < m; ++i) fn(static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < m; ++i) fn(static_cast<std::size_t>(i));
  }
#else
  replica_for_serial(n, fn);
#endif
}

}  // namespace gvu
