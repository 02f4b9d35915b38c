// OpenMP-backed loop helpers with a serial twin. Every parallel kernel in the
// library goes through these so that (a) SO3TENGEN_THREADS caps the thread
// count process-wide and (b) tests can force Exec::Serial and compare results
// bitwise. parallel_sum uses a fixed chunking independent of the thread count,
// so its result is bit-identical for any parallel configuration.
#pragma once

#include <cstddef>
#include <vector>

namespace so3tengen {

enum class Exec { Serial, Parallel };

// Effective worker count: OpenMP's limit clamped by SO3TENGEN_THREADS when
// that variable is set to a positive integer. 1 when built without OpenMP.
int thread_cap();

namespace detail {
void run_indexed(std::size_t n, void* ctx, void (*fn)(void*, std::size_t),
                 Exec mode);
}

template <class F>
void parallel_for(std::size_t n, F&& body, Exec mode = Exec::Parallel) {
  F local(static_cast<F&&>(body));
  detail::run_indexed(
      n, &local,
      [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); }, mode);
}

inline constexpr std::size_t kSumChunks = 64;

template <class F>
double parallel_sum(std::size_t n, F&& term, Exec mode = Exec::Parallel) {
  if (n == 0) return 0.0;
  const std::size_t chunks = n < kSumChunks ? n : kSumChunks;
  std::vector<double> partial(chunks, 0.0);
  F local(static_cast<F&&>(term));
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::size_t lo = n * c / chunks;
        const std::size_t hi = n * (c + 1) / chunks;
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += local(i);
        partial[c] = acc;
      },
      mode);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace so3tengen
