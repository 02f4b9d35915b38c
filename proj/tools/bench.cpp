// Wall-clock comparison of the serial and OpenMP execution twins on the
// kernels that dominate real use: Monte-Carlo symmetry sweeps and the probe
// batches behind numeric deduplication. Each case runs both modes, requires
// bitwise-identical results, and reports the speedup.
#include <chrono>
#include <cstdio>
#include <string>

#include "so3tengen/equivar.hpp"
#include "so3tengen/invgen.hpp"
#include "so3tengen/parallel.hpp"
#include "so3tengen/verify.hpp"

namespace {

using namespace so3tengen;

template <class F>
double wall(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

int report(const char* name, double serial, double parallel, bool match) {
  std::printf("%-42s serial %7.3fs  parallel %7.3fs  speedup %5.2fx  %s\n",
              name, serial, parallel, serial / parallel,
              match ? "match" : "MISMATCH");
  return match ? 0 : 1;
}

}  // namespace

int main() {
  std::printf("worker cap: %d\n", thread_cap());
  int failures = 0;

  {
    const inv::Signature sig = inv::Signature::parse("cart:2,cart:2");
    const inv::GeneratorSet set = inv::enumerate_networks(sig, 3, 1);
    vfy::VerificationReport a, b;
    const double ts = wall(
        [&] { a = vfy::check_invariance(set, 400, 1e-8, 1, Exec::Serial); });
    const double tp = wall(
        [&] { b = vfy::check_invariance(set, 400, 1e-8, 1, Exec::Parallel); });
    const std::string name = "invariance sweep, " +
                             std::to_string(set.generators.size()) +
                             " generators x 400";
    failures += report(name.c_str(), ts, tp, a == b);
  }

  {
    const inv::Signature sig = inv::Signature::parse("cart:2");
    const eqv::EquivariantBasis basis =
        eqv::equivariant_basis(sig, inv::Slot::cart(2), 2);
    vfy::VerificationReport a, b;
    const double ts = wall([&] {
      a = vfy::check_equivariance(basis, 300, 1e-8, 1, Exec::Serial);
    });
    const double tp = wall([&] {
      b = vfy::check_equivariance(basis, 300, 1e-8, 1, Exec::Parallel);
    });
    const std::string name = "equivariance sweep, " +
                             std::to_string(basis.elements.size()) +
                             " elements x 300";
    failures += report(name.c_str(), ts, tp, a == b);
  }

  {
    const inv::Signature sig = inv::Signature::parse("cart:1,cart:1,cart:1");
    const inv::GeneratorSet set = inv::enumerate_networks(sig, 4, 1);
    const int probes =
        std::max<int>(64, 2 * static_cast<int>(set.generators.size()));
    inv::GeneratorSet a, b;
    const double ts =
        wall([&] { a = inv::dedup_numeric(set, probes, 1e-8, Exec::Serial); });
    const double tp = wall(
        [&] { b = inv::dedup_numeric(set, probes, 1e-8, Exec::Parallel); });
    const std::string name = "numeric dedup, " +
                             std::to_string(set.generators.size()) +
                             " candidates x " + std::to_string(probes);
    failures += report(name.c_str(), ts, tp, a == b);
  }

  return failures;
}
