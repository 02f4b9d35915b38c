// Rotation-group machinery: Haar-random rotations, isotypic multiplicities,
// projectors from tensor powers onto single types and direct sums, irrep
// matrices, coupling coefficients. All outputs use the fixed real basis in
// which the type-1 components are the Cartesian axes themselves.
#pragma once

#include <array>
#include <utility>
#include <vector>

#include "so3tengen/network.hpp"
#include "so3tengen/rng.hpp"
#include "so3tengen/tensor.hpp"

namespace so3tengen::so3 {

struct Rotation {
  std::array<std::array<double, 3>, 3> m{};

  static Rotation identity();
  Rotation transposed() const;
  friend Rotation operator*(const Rotation& a, const Rotation& b);

  Tensor as_tensor() const;  // shape [3,3]
};

// Haar-distributed via a normalized Gaussian quaternion.
Rotation random_rotation(Rng& rng);

// Rodrigues formula; axis need not be normalized.
Rotation axis_angle(const std::array<double, 3>& axis, double angle);

// Apply R to every axis; all extents must be 3.
Tensor rotate_cartesian(const Rotation& R, const Tensor& t);

// Apply a square matrix to one axis of a tensor:
// out[.., b, ..] = sum_a  M[a][b] * t[.., a, ..]   (transpose_m = false)
// out[.., b, ..] = sum_a  M[b][a] * t[.., a, ..]   (transpose_m = true)
Tensor apply_matrix_axis(const Tensor& t, const Tensor& M, int axis,
                         bool transpose_m);

// Number of type-s copies inside the l-th tensor power of the vector
// representation. Integer exact; throws InvalidType outside 0 <= s <= l or
// above the cap.
int multiplicity(int l, int s);

// Ladder operator that steps the weight down by one, (2l+1) square,
// rows/columns ordered by descending weight.
Tensor lowering_op(int l);

struct Projector {
  int l = 0;
  Tensor p;  // shape [2l+1, 3, ..., 3] with l trailing axes
};

// Isometry from the l-th tensor power onto its unique type-l part,
// rows in the real basis. Cached; cap l <= 8. projector(1).p is the identity.
const Projector& projector(int l);

// Orthogonal map that couples (type l) x (type 1) into types l+1, l, l-1.
// Shape [3(2l+1), 3(2l+1)]; row index flattens (a, i) with a the type-l
// component and i the Cartesian axis; columns grouped by output type in the
// order l+1, l, l-1.
Tensor coupling_Q(int l);

struct ChangeOfBasis {
  int l = 0;
  Tensor o;  // orthogonal, 3^l square
  // One entry per irrep copy in row order: (type, first row).
  std::vector<std::pair<int, int>> groups;
};

// Full decomposition of the l-th tensor power, built inductively by coupling
// one factor at a time. Rows grouped by type (descending), copies adjacent.
// Cached; cap l <= 6.
const ChangeOfBasis& change_of_basis_O(int l);

// Representation matrix of R on type l, (2l+1) square, orthogonal.
Tensor irrep_matrix(int l, const Rotation& R);

struct CGTensor {
  int la = 0, lb = 0, lc = 0;
  bool nonzero = false;  // false iff the triangle rule fails
  Tensor c;              // shape [2la+1, 2lb+1, 2lc+1]
};

// Coupling coefficients, computed as the one-dimensional joint fixed space of
// the three-fold rotation action at several random rotations, normalized so
// the full self-contraction equals 2lc+1, sign fixed by making the first
// nonzero entry (row-major) positive. Cached.
const CGTensor& cg(int la, int lb, int lc);

struct SumProjector {
  std::vector<int> types;
  int wrap_rank = 0;
  Tensor p;  // shape [sum(2li+1), 3, ..., 3] with wrap_rank trailing axes
};

// Isometric intertwiner from a tensor power onto a direct sum of types; the
// ambient rank is the smallest one whose decomposition holds every summand
// with the needed multiplicity. Cached per type list.
const SumProjector& sum_projector(const std::vector<int>& types);

// Node-value provider wiring projector tensors into contract_network.
ProjectorProvider projector_provider();

// Monte Carlo symmetry check: types[k] is the irrep type carried by axis k
// (type 1 for plain Cartesian axes). Uses n_rotations Haar samples.
bool is_symmetric_tensor(const Tensor& t, const std::vector<int>& types,
                         double tol, Rng& rng, int n_rotations = 50);

}  // namespace so3tengen::so3
