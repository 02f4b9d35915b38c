// Equivariant operation bases built from the invariant enumeration: append
// the output as one extra input copy, enumerate closed generators linear in
// it, and delete that node. The open network that remains is the derivative
// with respect to the output variable and transforms like it. Also hosts
// the spherical tensor-product coupling and its equivalence check against
// the three-projector triangle network.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "so3tengen/invgen.hpp"
#include "so3tengen/network.hpp"
#include "so3tengen/tensor.hpp"

namespace so3tengen::eqv {

struct EquivariantNetwork {
  TensorNetwork net;             // open legs match the output slot
  inv::GeneratorNetwork source;  // closed generator it was cut from
  int output_slot = -1;          // slot index of the removed variable

  friend bool operator==(const EquivariantNetwork&,
                         const EquivariantNetwork&) = default;
};

struct EquivariantBasis {
  inv::Signature input_signature;
  inv::Slot output;
  int max_degree = 0;
  std::uint64_t seed = 0;  // probe seed used for map-level dedup
  std::vector<EquivariantNetwork> elements;

  friend bool operator==(const EquivariantBasis&,
                         const EquivariantBasis&) = default;
};

// Basis of equivariant maps sig_in -> out_rep of input degree <= max_degree.
// Internally enumerates closed generators over the extended signature where
// the output slot appears exactly once, removes the output node, and keeps a
// maximal independent subset (flattened evaluations on random probes,
// threshold tol relative to the largest map norm).
EquivariantBasis equivariant_basis(const inv::Signature& sig_in,
                                   const inv::Slot& out_rep, int max_degree,
                                   double tol = 1e-8);

// Bindings cover input slots only; axes of the result follow the removed
// node's leg order.
Tensor evaluate_basis_element(const EquivariantNetwork& e,
                              const Bindings& bind);

// Sum of coeffs[j] * values[j]. Throws ShapeMismatch on uneven shapes.
Tensor combine(const std::vector<Tensor>& values,
               const std::vector<double>& coeffs);

// Full pairing <value, y> of equal-shaped tensors; composing it with
// evaluate_basis_element recovers the closed generator with y bound.
double pair_down(const Tensor& value, const Tensor& y);

struct TpResult {
  Tensor value;         // shape [2*lc+1]
  bool coupled = true;  // false when the triangle rule forbids lc
};

// c_t = sum_{rs} C_{rst} a_r b_s with the cached coupling tensor.
TpResult tp_couple(const Tensor& a, int la, const Tensor& b, int lb, int lc);

// Builds the coupling tensor a second way, as a triangle of three
// projectors sharing Cartesian legs (plus one epsilon node when la+lb+lc is
// odd), and returns the proportionality factor kappa against the
// eigenvector-based coupling tensor. Throws ProportionalityFailure when the
// two disagree or kappa vanishes, InvalidType when the triangle rule fails.
double tp_network_equals_cg(int la, int lb, int lc);

// One-line structural description (node kinds, edges, open legs).
std::string network_sketch(const TensorNetwork& net);

Json basis_to_json(const EquivariantBasis& basis);
EquivariantBasis basis_from_json(const Json& j);

}  // namespace so3tengen::eqv
