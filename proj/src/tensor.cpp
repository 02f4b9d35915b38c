#include "so3tengen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace so3tengen {

namespace {

std::size_t checked_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) {
    if (e <= 0) throw ShapeMismatch("tensor extent must be positive");
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

// Odometer step over a multi-index; returns false after the last index.
bool advance(std::vector<int>& idx, const std::vector<int>& shape) {
  for (int k = static_cast<int>(shape.size()) - 1; k >= 0; --k) {
    if (++idx[k] < shape[k]) return true;
    idx[k] = 0;
  }
  return false;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

double Tensor::value() const {
  if (!shape_.empty()) throw ShapeMismatch("value() requires a rank-0 tensor");
  return data_[0];
}

std::size_t Tensor::offset(const std::vector<int>& idx) const {
  if (idx.size() != shape_.size())
    throw ShapeMismatch("index rank mismatch");
  std::size_t off = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= shape_[k])
      throw ShapeMismatch("index out of range");
    off = off * static_cast<std::size_t>(shape_[k]) +
          static_cast<std::size_t>(idx[k]);
  }
  return off;
}

std::vector<std::size_t> strides_of(const std::vector<int>& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (int k = static_cast<int>(shape.size()) - 2; k >= 0; --k)
    s[k] = s[k + 1] * static_cast<std::size_t>(shape[k + 1]);
  return s;
}

Tensor delta() {
  Tensor t({3, 3});
  for (int i = 0; i < 3; ++i) t.at({i, i}) = 1.0;
  return t;
}

Tensor epsilon() {
  Tensor t({3, 3, 3});
  t.at({0, 1, 2}) = 1.0;
  t.at({1, 2, 0}) = 1.0;
  t.at({2, 0, 1}) = 1.0;
  t.at({0, 2, 1}) = -1.0;
  t.at({2, 1, 0}) = -1.0;
  t.at({1, 0, 2}) = -1.0;
  return t;
}

Tensor permute(const Tensor& t, const std::vector<int>& axes) {
  const int r = t.rank();
  if (static_cast<int>(axes.size()) != r)
    throw InvalidPermutation("axis list length does not match rank");
  std::vector<char> seen(r, 0);
  for (int a : axes) {
    if (a < 0 || a >= r || seen[a])
      throw InvalidPermutation("axis list is not a permutation");
    seen[a] = 1;
  }
  std::vector<int> out_shape(r);
  for (int k = 0; k < r; ++k) out_shape[k] = t.shape()[axes[k]];
  Tensor out(out_shape);
  if (r == 0) {
    out[0] = t[0];
    return out;
  }
  const auto in_strides = strides_of(t.shape());
  std::vector<std::size_t> gather(r);
  for (int k = 0; k < r; ++k) gather[k] = in_strides[axes[k]];
  std::vector<int> idx(r, 0);
  std::size_t flat = 0;
  do {
    std::size_t src = 0;
    for (int k = 0; k < r; ++k)
      src += gather[k] * static_cast<std::size_t>(idx[k]);
    out[flat++] = t[src];
  } while (advance(idx, out_shape));
  return out;
}

namespace {

void check_axis_list(const std::vector<std::pair<int, int>>& pairs, int ra,
                     int rb) {
  std::vector<char> ua(ra, 0), ub(rb, 0);
  for (auto [a, b] : pairs) {
    if (a < 0 || a >= ra || b < 0 || b >= rb)
      throw InvalidPermutation("contraction axis out of range");
    if (ua[a] || ub[b])
      throw InvalidPermutation("contraction axis repeated");
    ua[a] = ub[b] = 1;
  }
}

}  // namespace

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& pairs) {
  check_axis_list(pairs, a.rank(), b.rank());
  std::vector<char> ca(a.rank(), 0), cb(b.rank(), 0);
  for (auto [x, y] : pairs) {
    if (a.shape()[x] != b.shape()[y])
      throw ShapeMismatch("contracted extents differ: " +
                          std::to_string(a.shape()[x]) + " vs " +
                          std::to_string(b.shape()[y]));
    ca[x] = 1;
    cb[y] = 1;
  }
  std::vector<int> free_a, free_b;
  for (int k = 0; k < a.rank(); ++k)
    if (!ca[k]) free_a.push_back(k);
  for (int k = 0; k < b.rank(); ++k)
    if (!cb[k]) free_b.push_back(k);

  std::vector<int> out_shape, sum_shape;
  for (int k : free_a) out_shape.push_back(a.shape()[k]);
  for (int k : free_b) out_shape.push_back(b.shape()[k]);
  for (auto [x, y] : pairs) {
    (void)y;
    sum_shape.push_back(a.shape()[x]);
  }
  Tensor out(out_shape);

  const auto sa = strides_of(a.shape());
  const auto sb = strides_of(b.shape());

  // Strides of the output multi-index into a resp. b, then of the summed
  // multi-index into both.
  std::vector<std::size_t> oa, ob, ta, tb;
  for (int k : free_a) oa.push_back(sa[k]);
  for (std::size_t k = 0; k < free_b.size(); ++k) ob.push_back(sb[free_b[k]]);
  for (auto [x, y] : pairs) {
    ta.push_back(sa[x]);
    tb.push_back(sb[y]);
  }

  std::vector<int> oidx(out_shape.size(), 0);
  std::size_t flat = 0;
  do {
    std::size_t base_a = 0, base_b = 0;
    for (std::size_t k = 0; k < free_a.size(); ++k)
      base_a += oa[k] * static_cast<std::size_t>(oidx[k]);
    for (std::size_t k = 0; k < free_b.size(); ++k)
      base_b += ob[k] * static_cast<std::size_t>(oidx[free_a.size() + k]);
    double acc = 0.0;
    if (sum_shape.empty()) {
      acc = a[base_a] * b[base_b];
    } else {
      std::vector<int> sidx(sum_shape.size(), 0);
      do {
        std::size_t pa = base_a, pb = base_b;
        for (std::size_t k = 0; k < sidx.size(); ++k) {
          pa += ta[k] * static_cast<std::size_t>(sidx[k]);
          pb += tb[k] * static_cast<std::size_t>(sidx[k]);
        }
        acc += a[pa] * b[pb];
      } while (advance(sidx, sum_shape));
    }
    out[flat++] = acc;
  } while (!out_shape.empty() && advance(oidx, out_shape));
  if (out_shape.empty()) return Tensor::scalar(out[0]);
  return out;
}

Tensor trace_pairs(const Tensor& t,
                   const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) return t;
  std::vector<char> used(t.rank(), 0);
  for (auto [x, y] : pairs) {
    if (x < 0 || x >= t.rank() || y < 0 || y >= t.rank() || x == y)
      throw InvalidPermutation("trace axis out of range");
    if (used[x] || used[y]) throw InvalidPermutation("trace axis repeated");
    if (t.shape()[x] != t.shape()[y])
      throw ShapeMismatch("traced extents differ");
    used[x] = used[y] = 1;
  }
  std::vector<int> free_axes;
  for (int k = 0; k < t.rank(); ++k)
    if (!used[k]) free_axes.push_back(k);

  std::vector<int> out_shape, sum_shape;
  for (int k : free_axes) out_shape.push_back(t.shape()[k]);
  for (auto [x, y] : pairs) {
    (void)y;
    sum_shape.push_back(t.shape()[x]);
  }
  Tensor out(out_shape);
  const auto st = strides_of(t.shape());
  std::vector<std::size_t> of, tp;
  for (int k : free_axes) of.push_back(st[k]);
  for (auto [x, y] : pairs) tp.push_back(st[x] + st[y]);

  std::vector<int> oidx(out_shape.size(), 0);
  std::size_t flat = 0;
  do {
    std::size_t base = 0;
    for (std::size_t k = 0; k < of.size(); ++k)
      base += of[k] * static_cast<std::size_t>(oidx[k]);
    double acc = 0.0;
    std::vector<int> sidx(sum_shape.size(), 0);
    do {
      std::size_t p = base;
      for (std::size_t k = 0; k < sidx.size(); ++k)
        p += tp[k] * static_cast<std::size_t>(sidx[k]);
      acc += t[p];
    } while (advance(sidx, sum_shape));
    out[flat++] = acc;
  } while (!out_shape.empty() && advance(oidx, out_shape));
  if (out_shape.empty()) return Tensor::scalar(out[0]);
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("dot requires equal shapes");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double frobenius_norm(const Tensor& t) { return std::sqrt(dot(t, t)); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("compare requires equal shapes");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace so3tengen
