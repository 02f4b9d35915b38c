#include "so3tengen/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace so3tengen {

int thread_cap() {
#ifdef _OPENMP
  int cap = omp_get_max_threads();
#else
  int cap = 1;
#endif
  static const int env_cap = [] {
    const char* s = std::getenv("SO3TENGEN_THREADS");
    if (!s) return 0;
    try {
      const int v = std::stoi(s);
      return v > 0 ? v : 0;
    } catch (...) {
      return 0;
    }
  }();
  if (env_cap > 0 && env_cap < cap) cap = env_cap;
  return cap;
}

namespace detail {

void run_indexed(std::size_t n, void* ctx, void (*fn)(void*, std::size_t),
                 Exec mode) {
  if (mode == Exec::Parallel && thread_cap() > 1 && n > 1) {
#ifdef _OPENMP
    const int nt = thread_cap();
#pragma omp parallel for num_threads(nt) schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(ctx, static_cast<std::size_t>(i));
    return;
#endif
  }
  for (std::size_t i = 0; i < n; ++i) fn(ctx, i);
}

}  // namespace detail

}  // namespace so3tengen
