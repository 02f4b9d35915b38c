// Monte-Carlo certification of the symmetry contracts. Every generator in a
// set is checked for invariance, every basis element for equivariance, over
// seeded random (binding, rotation) pairs with one fresh binding per
// rotation. Violations are residuals normalized by 1 + the unrotated
// magnitude; a report passes iff the largest violation stays within tol.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "so3tengen/equivar.hpp"
#include "so3tengen/invgen.hpp"
#include "so3tengen/json_common.hpp"
#include "so3tengen/parallel.hpp"

namespace so3tengen::vfy {

struct VerificationReport {
  std::string signature;  // input signature text
  std::string out_rep;    // empty for invariant generator sets
  int max_degree = 0;
  std::vector<double> invariance;    // per generator, max over rotations
  std::vector<double> equivariance;  // per basis element, max over rotations
  int rotations = 0;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  bool pass = false;  // every recorded violation <= tol

  friend bool operator==(const VerificationReport&,
                         const VerificationReport&) = default;
};

// max_k |f(R_k x_k) - f(x_k)| / (1 + |f(x_k)|) per generator. Throws Error
// when rotations <= 0. Deterministic for either Exec mode.
VerificationReport check_invariance(const inv::GeneratorSet& set,
                                    int rotations = 200, double tol = 1e-8,
                                    std::uint64_t seed = 1,
                                    Exec mode = Exec::Parallel);

// max_k ||t(R_k x_k) - R_k t(x_k)||_F / (1 + ||t(x_k)||_F) per element; the
// output side rotates by the rule of the basis output slot.
VerificationReport check_equivariance(const eqv::EquivariantBasis& basis,
                                      int rotations = 100, double tol = 1e-8,
                                      std::uint64_t seed = 1,
                                      Exec mode = Exec::Parallel);

Json report_to_json(const VerificationReport& r);
VerificationReport report_from_json(const Json& j);

}  // namespace so3tengen::vfy
