// Dense row-major tensor with arbitrary extents plus the pointwise kernels
// everything else is built from: permutation, pairwise contraction, internal
// traces, outer products. Rank 0 is a scalar and is fully supported.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "so3tengen/errors.hpp"

namespace so3tengen {

class Tensor {
 public:
  Tensor() : shape_(), data_(1, 0.0) {}  // rank-0 zero
  explicit Tensor(std::vector<int> shape);

  static Tensor scalar(double v) {
    Tensor t;
    t.data_[0] = v;
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(const std::vector<int>& idx) { return data_[offset(idx)]; }
  double at(const std::vector<int>& idx) const { return data_[offset(idx)]; }

  // Rank-0 access.
  double value() const;

  std::size_t offset(const std::vector<int>& idx) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// Row-major strides for a shape.
std::vector<std::size_t> strides_of(const std::vector<int>& shape);

// Kronecker delta, shape [3,3].
Tensor delta();

// Levi-Civita symbol, shape [3,3,3].
Tensor epsilon();

// out.shape[k] = t.shape[axes[k]]; the element at out position j equals t at
// the position p with p[axes[k]] = j[k]. axes must be a permutation of
// 0..rank-1, otherwise InvalidPermutation.
Tensor permute(const Tensor& t, const std::vector<int>& axes);

// Contract a and b over the given (axis of a, axis of b) pairs. Result axes:
// a's free axes in order, then b's free axes in order. Empty pair list gives
// the outer product. Throws ShapeMismatch on extent disagreement and
// InvalidPermutation if an axis is repeated or out of range.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& pairs);

// Trace out pairs of axes of a single tensor; remaining axes keep their
// relative order.
Tensor trace_pairs(const Tensor& t,
                   const std::vector<std::pair<int, int>>& pairs);

// Full contraction of two same-shape tensors.
double dot(const Tensor& a, const Tensor& b);

double frobenius_norm(const Tensor& t);

// max_i |a_i - b_i|; shapes must agree.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace so3tengen
