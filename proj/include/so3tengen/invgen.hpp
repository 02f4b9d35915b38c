// Enumeration of the scalar building blocks attached to a signature of
// rotating inputs: all connected closed tensor networks over copies of the
// inputs, pairwise index contractions as direct edges, and at most one
// antisymmetric node. Deduplication happens twice: structurally (graph
// canonicalization) and numerically (linear independence on random probes).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "so3tengen/network.hpp"
#include "so3tengen/parallel.hpp"
#include "so3tengen/rng.hpp"
#include "so3tengen/so3rep.hpp"
#include "so3tengen/tensor.hpp"

namespace so3tengen::inv {

enum class SlotKind { Cartesian, Spherical, Sum };

struct Slot {
  SlotKind kind = SlotKind::Cartesian;
  int rank = 0;            // Cartesian: number of 3-extent axes
  int type = 0;            // Spherical
  std::vector<int> types;  // Sum summands, in declared order

  static Slot cart(int rank);
  static Slot sph(int type);
  static Slot sum(std::vector<int> types);

  // Shape the caller binds for this slot.
  std::vector<int> bound_shape() const;
  // Number of 3-extent legs the slot exposes inside a network (after the
  // wrapping node for non-Cartesian slots).
  int cart_legs() const;

  friend bool operator==(const Slot&, const Slot&) = default;
};

struct Signature {
  std::vector<Slot> slots;

  // Grammar: comma-separated "cart:<r>", "sph:<l>", "sum:<l1>+<l2>+...".
  // Ranks and types are capped at 4. Throws InvalidType on violations.
  static Signature parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const Signature&, const Signature&) = default;
};

struct GeneratorNetwork {
  TensorNetwork net;        // closed and connected
  std::vector<int> degree;  // copies used per slot
  bool uses_epsilon = false;

  friend bool operator==(const GeneratorNetwork&,
                         const GeneratorNetwork&) = default;
};

struct GeneratorSet {
  Signature signature;
  int max_degree = 0;
  std::uint64_t seed = 0;  // drives probe draws in dedup_numeric
  std::vector<GeneratorNetwork> generators;

  friend bool operator==(const GeneratorSet&, const GeneratorSet&) = default;
};

// All connected closed networks with at most max_degree input copies in
// total. Non-Cartesian slots enter through their projector node. Copy
// multisets with an odd total 3-extent leg count get exactly one epsilon
// node when epsilon_budget is 1 and are skipped when it is 0. The result is
// canonically deduplicated and ordered by (total degree, canonical key).
// Throws EnumerationTooLarge past internal matching caps.
GeneratorSet enumerate_networks(const Signature& sig, int max_degree,
                                int epsilon_budget);

// Isomorphism-invariant fingerprint via iterative neighborhood-refinement
// coloring. Copies of one slot are interchangeable, as are the legs of
// delta/epsilon nodes and the 3-extent legs of a single-type projector.
// Equal keys are necessary, not sufficient; enumerate_networks settles
// collisions with an exact isomorphism test.
std::string canonical_key(const GeneratorNetwork& g);

// Exact equivalence under the relabelings listed above.
bool networks_isomorphic(const GeneratorNetwork& a, const GeneratorNetwork& b);

// Keeps a maximal linearly independent prefix-biased subset, judged by
// evaluations on probe_count random bindings (entries uniform in [-1,1],
// derived from in.seed). Vectors whose residual against the kept span falls
// below tol times the largest evaluation norm are dropped; earlier
// generators win. Requires probe_count >= 2 * generator count.
GeneratorSet dedup_numeric(const GeneratorSet& in, int probe_count,
                           double tol, Exec mode = Exec::Parallel);

double evaluate_generator(const GeneratorNetwork& g, const Bindings& bind);

// Embeds a (2l+1)-vector as an l-axis Cartesian tensor via the type-l
// projector. l = 0 passes the scalar through; l = 1 is the identity.
Tensor wrap_spherical(const Tensor& x, int l);

// Exhaustively verifies, in integer arithmetic over all 729 index tuples,
// that a product of two antisymmetric nodes reduces to identity-node terms.
// This is why one epsilon node suffices at odd parity and none at even.
bool epsilon_pair_reduce_check();

// Random binding for every slot, entries uniform in [-1,1].
Bindings random_bindings(const Signature& sig, Rng& rng);

// How a rotation acts on the tensor bound to one slot: axis-wise on
// Cartesian tensors, by irrep matrices (blockwise for sums) otherwise.
Tensor apply_slot_rotation(const Slot& slot, const so3::Rotation& R,
                           const Tensor& value);

Json generator_set_to_json(const GeneratorSet& set);
GeneratorSet generator_set_from_json(const Json& j);

}  // namespace so3tengen::inv
