#include "so3tengen/so3rep.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "so3tengen/errors.hpp"

namespace so3tengen::so3 {

namespace {

constexpr int kProjectorCap = 8;
constexpr int kOCap = 6;
constexpr int kMultCap = 12;

long long factorial(int n) {
  long long f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

int ipow3(int n) {
  int p = 1;
  for (int k = 0; k < n; ++k) p *= 3;
  return p;
}

using Cplx = std::complex<double>;

}  // namespace

Rotation Rotation::identity() {
  Rotation r;
  for (int i = 0; i < 3; ++i) r.m[i][i] = 1.0;
  return r;
}

Rotation Rotation::transposed() const {
  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
  return r;
}

Rotation operator*(const Rotation& a, const Rotation& b) {
  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += a.m[i][k] * b.m[k][j];
      r.m[i][j] = acc;
    }
  return r;
}

Tensor Rotation::as_tensor() const {
  Tensor t({3, 3});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t.at({i, j}) = m[i][j];
  return t;
}

Rotation random_rotation(Rng& rng) {
  double q[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& v : q) {
      v = rng.normal();
      n2 += v * v;
    }
  } while (n2 < 1e-12);
  const double inv = 1.0 / std::sqrt(n2);
  const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
  Rotation r;
  r.m[0][0] = 1 - 2 * (y * y + z * z);
  r.m[0][1] = 2 * (x * y - w * z);
  r.m[0][2] = 2 * (x * z + w * y);
  r.m[1][0] = 2 * (x * y + w * z);
  r.m[1][1] = 1 - 2 * (x * x + z * z);
  r.m[1][2] = 2 * (y * z - w * x);
  r.m[2][0] = 2 * (x * z - w * y);
  r.m[2][1] = 2 * (y * z + w * x);
  r.m[2][2] = 1 - 2 * (x * x + y * y);
  return r;
}

Rotation axis_angle(const std::array<double, 3>& axis, double angle) {
  double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] +
                       axis[2] * axis[2]);
  if (n == 0.0) throw InvalidType("axis_angle: zero axis");
  const double ux = axis[0] / n, uy = axis[1] / n, uz = axis[2] / n;
  const double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
  Rotation r;
  r.m[0][0] = c + ux * ux * t;
  r.m[0][1] = ux * uy * t - uz * s;
  r.m[0][2] = ux * uz * t + uy * s;
  r.m[1][0] = uy * ux * t + uz * s;
  r.m[1][1] = c + uy * uy * t;
  r.m[1][2] = uy * uz * t - ux * s;
  r.m[2][0] = uz * ux * t - uy * s;
  r.m[2][1] = uz * uy * t + ux * s;
  r.m[2][2] = c + uz * uz * t;
  return r;
}

Tensor apply_matrix_axis(const Tensor& t, const Tensor& M, int axis,
                         bool transpose_m) {
  if (M.rank() != 2) throw ShapeMismatch("apply_matrix_axis needs a matrix");
  if (axis < 0 || axis >= t.rank())
    throw InvalidPermutation("apply_matrix_axis: axis out of range");
  const int in_dim = transpose_m ? M.shape()[1] : M.shape()[0];
  const int out_dim = transpose_m ? M.shape()[0] : M.shape()[1];
  if (t.shape()[axis] != in_dim)
    throw ShapeMismatch("apply_matrix_axis: extent mismatch");

  std::vector<int> out_shape = t.shape();
  out_shape[axis] = out_dim;
  Tensor out(out_shape);

  std::size_t inner = 1, outer = 1;
  for (int k = axis + 1; k < t.rank(); ++k) inner *= t.shape()[k];
  for (int k = 0; k < axis; ++k) outer *= t.shape()[k];

  for (std::size_t o = 0; o < outer; ++o)
    for (int b = 0; b < out_dim; ++b)
      for (std::size_t i = 0; i < inner; ++i) {
        double acc = 0.0;
        for (int a = 0; a < in_dim; ++a) {
          const double mv = transpose_m ? M.at({b, a}) : M.at({a, b});
          acc += mv * t[(o * in_dim + a) * inner + i];
        }
        out[(o * out_dim + b) * inner + i] = acc;
      }
  return out;
}

Tensor rotate_cartesian(const Rotation& R, const Tensor& t) {
  for (int e : t.shape())
    if (e != 3) throw ShapeMismatch("rotate_cartesian needs all extents 3");
  Tensor out = t;
  const Tensor Rt = R.as_tensor();
  for (int axis = 0; axis < t.rank(); ++axis)
    out = apply_matrix_axis(out, Rt, axis, true);
  return out;
}

int multiplicity(int l, int s) {
  if (l < 0 || s < 0 || s > l)
    throw InvalidType("multiplicity: need 0 <= s <= l, got l=" +
                      std::to_string(l) + " s=" + std::to_string(s));
  if (l > kMultCap)
    throw InvalidType("multiplicity: l above cap " + std::to_string(kMultCap));
  if (l == 0) return 1;
  long long d = 0;
  for (int i = s; i <= (s + l) / 2; ++i) {
    const int a = s + l - 2 * i, b = i - s;
    if (a < 0 || b < 0) continue;
    d += factorial(l) / (factorial(i) * factorial(a) * factorial(b));
  }
  for (int i = s + 1; i <= (s + l + 1) / 2; ++i) {
    const int a = s + l + 1 - 2 * i, b = i - s - 1;
    if (a < 0 || b < 0) continue;
    d -= factorial(l) / (factorial(i) * factorial(a) * factorial(b));
  }
  return static_cast<int>(d);
}

Tensor lowering_op(int l) {
  if (l < 0 || l > kMultCap) throw InvalidType("lowering_op: bad type");
  const int n = 2 * l + 1;
  Tensor L({n, n});
  // Column index l - m holds weight m; the step lands on weight m - 1.
  for (int m = -l + 1; m <= l; ++m)
    L.at({l - (m - 1), l - m}) =
        std::sqrt(static_cast<double>((l - m + 1)) * (l + m));
  return L;
}

namespace {

// Complex change of basis from weight basis (descending) to the fixed real
// basis: pairs (cos m, sin m) for m = l..1, weight-0 row last.
std::vector<Cplx> real_basis_rows(int l) {
  const int n = 2 * l + 1;
  std::vector<Cplx> T(static_cast<std::size_t>(n) * n, Cplx(0, 0));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  auto idx = [&](int m) { return l - m; };
  int row = 0;
  for (int m = l; m >= 1; --m) {
    const double sg = (m % 2 == 0) ? 1.0 : -1.0;
    T[row * n + idx(m)] = Cplx(inv_sqrt2, 0);
    T[row * n + idx(-m)] = Cplx(sg * inv_sqrt2, 0);
    ++row;
    T[row * n + idx(m)] = Cplx(0, inv_sqrt2);
    T[row * n + idx(-m)] = Cplx(0, -sg * inv_sqrt2);
    ++row;
  }
  T[row * n + idx(0)] = Cplx(1, 0);
  return T;
}

Projector build_projector(int l) {
  Projector out;
  out.l = l;
  if (l == 0) {
    out.p = Tensor({1});
    out.p[0] = 1.0;
    return out;
  }
  const int n = 2 * l + 1;
  const int n3 = ipow3(l);

  // Weight-basis coefficients; all entries real and nonnegative.
  std::vector<Cplx> X(static_cast<std::size_t>(n) * n3, Cplx(0, 0));
  const double inv_f2l = 1.0 / static_cast<double>(factorial(2 * l));
  for (int col = 0; col < n3; ++col) {
    int c = col, sum = 0, minus = 0;
    for (int k = 0; k < l; ++k) {
      const int digit = c % 3;  // 0 -> +1, 1 -> 0, 2 -> -1 weight
      c /= 3;
      sum += 1 - digit;
      minus += digit == 2;
    }
    const int m = sum;
    const double coeff =
        std::ldexp(1.0, -minus) *
        std::sqrt(static_cast<double>(factorial(l - m)) * factorial(l + m) *
                  std::ldexp(1.0, l - m) * inv_f2l);
    X[static_cast<std::size_t>(l - m) * n3 + col] = Cplx(coeff, 0);
  }

  // Right factors: realify every 3-extent axis.
  const std::vector<Cplx> T1 = real_basis_rows(1);
  std::vector<Cplx> Y(X.size());
  int stride = n3 / 3;  // stride of axis 0 among the l trailing axes
  for (int axis = 0; axis < l; ++axis) {
    const int blocks = n3 / (3 * stride);
    for (int row = 0; row < n; ++row)
      for (int blk = 0; blk < blocks; ++blk)
        for (int off = 0; off < stride; ++off) {
          const std::size_t base =
              static_cast<std::size_t>(row) * n3 +
              static_cast<std::size_t>(blk) * 3 * stride + off;
          for (int i = 0; i < 3; ++i) {
            Cplx acc(0, 0);
            for (int s = 0; s < 3; ++s)
              acc += X[base + static_cast<std::size_t>(s) * stride] *
                     std::conj(T1[i * 3 + s]);
            Y[base + static_cast<std::size_t>(i) * stride] = acc;
          }
        }
    X.swap(Y);
    stride /= 3;
  }

  // Left factor: realify the type-l axis.
  const std::vector<Cplx> Tl = real_basis_rows(l);
  out.p = Tensor([&] {
    std::vector<int> shape{n};
    shape.insert(shape.end(), l, 3);
    return shape;
  }());
  double max_imag = 0.0;
  for (int j = 0; j < n; ++j)
    for (int col = 0; col < n3; ++col) {
      Cplx acc(0, 0);
      for (int m = 0; m < n; ++m) {
        const Cplx t = Tl[static_cast<std::size_t>(j) * n + m];
        if (t != Cplx(0, 0))
          acc += t * X[static_cast<std::size_t>(m) * n3 + col];
      }
      max_imag = std::max(max_imag, std::abs(acc.imag()));
      out.p[static_cast<std::size_t>(j) * n3 + col] = acc.real();
    }
  if (max_imag > 1e-10)
    throw BasisConventionError(
        "projector realification left imaginary residual " +
        std::to_string(max_imag));
  return out;
}

std::mutex projector_mutex;
std::map<int, Projector> projector_cache;

}  // namespace

const Projector& projector(int l) {
  if (l < 0 || l > kProjectorCap)
    throw InvalidType("projector: type " + std::to_string(l) +
                      " outside 0.." + std::to_string(kProjectorCap));
  std::lock_guard<std::mutex> lock(projector_mutex);
  auto it = projector_cache.find(l);
  if (it == projector_cache.end())
    it = projector_cache.emplace(l, build_projector(l)).first;
  return it->second;
}

Tensor irrep_matrix(int l, const Rotation& R) {
  const Projector& P = projector(l);
  if (l == 0) {
    Tensor d({1, 1});
    d[0] = 1.0;
    return d;
  }
  Tensor rotated = P.p;
  const Tensor Rt = R.as_tensor();
  for (int axis = 1; axis <= l; ++axis)
    rotated = apply_matrix_axis(rotated, Rt, axis, true);
  std::vector<std::pair<int, int>> pairs;
  for (int axis = 1; axis <= l; ++axis) pairs.emplace_back(axis, axis);
  return contract(P.p, rotated, pairs);
}

namespace {

CGTensor build_cg(int la, int lb, int lc) {
  CGTensor out;
  out.la = la;
  out.lb = lb;
  out.lc = lc;
  const int na = 2 * la + 1, nb = 2 * lb + 1, nc = 2 * lc + 1;
  out.c = Tensor({na, nb, nc});
  if (lc < std::abs(la - lb) || lc > la + lb) {
    out.nonzero = false;
    return out;
  }
  const int N = na * nb * nc;

  // Joint fixed space of the three-fold action at a handful of random
  // rotations; it is one-dimensional whenever the triangle rule holds.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
  Rng rng = Rng::from_path(0x50334347ull, la, lb, lc);
  const int n_rot = 4;
  std::vector<Eigen::MatrixXd> ms;
  for (int k = 0; k < n_rot; ++k) {
    const Rotation R = random_rotation(rng);
    const Tensor Da = irrep_matrix(la, R);
    const Tensor Db = irrep_matrix(lb, R);
    const Tensor Dc = irrep_matrix(lc, R);
    Eigen::MatrixXd M(N, N);
    for (int r = 0; r < na; ++r)
      for (int s = 0; s < nb; ++s)
        for (int t = 0; t < nc; ++t)
          for (int r2 = 0; r2 < na; ++r2)
            for (int s2 = 0; s2 < nb; ++s2)
              for (int t2 = 0; t2 < nc; ++t2)
                M((r * nb + s) * nc + t, (r2 * nb + s2) * nc + t2) =
                    Da.at({r, r2}) * Db.at({s, s2}) * Dc.at({t, t2});
    M -= Eigen::MatrixXd::Identity(N, N);
    G += M.transpose() * M;
    ms.push_back(std::move(M));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const auto& vals = es.eigenvalues();
  if (vals(0) > 1e-12 * std::max(1.0, vals(N - 1)))
    throw Error("coupling fixed space is empty despite triangle rule");
  if (N > 1 && vals(1) < 1e-6 * std::max(1.0, vals(N - 1)))
    throw Error("coupling fixed space is not one-dimensional");
  Eigen::VectorXd v = es.eigenvectors().col(0);
  for (const auto& M : ms)
    if ((M * v).norm() > 1e-9)
      throw Error("coupling vector fails the fixed-point residual");

  // Self-contraction 2lc+1, first nonzero entry positive.
  v *= std::sqrt(static_cast<double>(nc)) / v.norm();
  double lead = 0.0;
  const double cut = 1e-6 * v.cwiseAbs().maxCoeff();
  for (int i = 0; i < N; ++i)
    if (std::abs(v(i)) > cut) {
      lead = v(i);
      break;
    }
  if (lead < 0) v = -v;
  for (int i = 0; i < N; ++i) out.c[i] = v(i);
  out.nonzero = true;
  return out;
}

std::mutex cg_mutex;
std::map<std::tuple<int, int, int>, CGTensor> cg_cache;

}  // namespace

const CGTensor& cg(int la, int lb, int lc) {
  if (la < 0 || lb < 0 || lc < 0)
    throw InvalidType("cg: negative type");
  if (la > 5 || lb > 5 || lc > 10)
    throw InvalidType("cg: type above cap");
  std::lock_guard<std::mutex> lock(cg_mutex);
  const auto key = std::make_tuple(la, lb, lc);
  auto it = cg_cache.find(key);
  if (it == cg_cache.end())
    it = cg_cache.emplace(key, build_cg(la, lb, lc)).first;
  return it->second;
}

Tensor coupling_Q(int l) {
  if (l < 1 || l > 5) throw InvalidType("coupling_Q: need 1 <= l <= 5");
  const int rows = 3 * (2 * l + 1);
  Tensor Q({rows, rows});
  int col = 0;
  for (int lc = l + 1; lc >= l - 1; --lc) {
    const CGTensor& C = cg(l, 1, lc);
    for (int t = 0; t < 2 * lc + 1; ++t) {
      for (int a = 0; a < 2 * l + 1; ++a)
        for (int i = 0; i < 3; ++i) Q.at({a * 3 + i, col}) = C.c.at({a, i, t});
      ++col;
    }
  }
  return Q;
}

namespace {

ChangeOfBasis build_O(int l) {
  ChangeOfBasis out;
  out.l = l;
  if (l == 1) {
    out.o = delta();
    out.groups = {{1, 0}};
    return out;
  }
  const ChangeOfBasis prev = build_O(l - 1);  // cache handled by caller
  const int n_old = ipow3(l - 1), n_new = ipow3(l);

  struct Block {
    int type;
    std::vector<std::vector<double>> rows;
  };
  std::vector<Block> blocks;
  for (const auto& [s, r0] : prev.groups) {
    for (int lc = s + 1; lc >= std::max(0, s - 1); --lc) {
      if (s == 0 && lc != 1) continue;
      const CGTensor& C = cg(s, 1, lc);
      if (!C.nonzero) continue;
      Block blk;
      blk.type = lc;
      for (int t = 0; t < 2 * lc + 1; ++t) {
        std::vector<double> row(n_new, 0.0);
        for (int c = 0; c < n_old; ++c)
          for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int a = 0; a < 2 * s + 1; ++a)
              acc += C.c.at({a, j, t}) * prev.o.at({r0 + a, c});
            row[c * 3 + j] = acc;
          }
        blk.rows.push_back(std::move(row));
      }
      blocks.push_back(std::move(blk));
    }
  }
  std::stable_sort(blocks.begin(), blocks.end(),
                   [](const Block& a, const Block& b) { return a.type > b.type; });

  out.o = Tensor({n_new, n_new});
  int row = 0;
  for (const auto& blk : blocks) {
    out.groups.emplace_back(blk.type, row);
    for (const auto& r : blk.rows) {
      for (int c = 0; c < n_new; ++c) out.o.at({row, c}) = r[c];
      ++row;
    }
  }
  if (row != n_new)
    throw Error("type power decomposition lost rows");
  return out;
}

std::mutex o_mutex;
std::map<int, ChangeOfBasis> o_cache;

}  // namespace

const ChangeOfBasis& change_of_basis_O(int l) {
  if (l < 1 || l > kOCap)
    throw InvalidType("change_of_basis_O: need 1 <= l <= " +
                      std::to_string(kOCap));
  std::lock_guard<std::mutex> lock(o_mutex);
  auto it = o_cache.find(l);
  if (it == o_cache.end()) it = o_cache.emplace(l, build_O(l)).first;
  return it->second;
}

namespace {

SumProjector build_sum_projector(const std::vector<int>& types) {
  SumProjector out;
  out.types = types;
  if (types.size() == 1) {
    const Projector& P = projector(types[0]);
    out.wrap_rank = types[0];
    out.p = P.p;
    return out;
  }
  int max_t = 1;
  std::map<int, int> want;
  for (int t : types) {
    if (t < 0) throw InvalidType("sum_projector: negative type");
    ++want[t];
    max_t = std::max(max_t, t);
  }
  int r = max_t;
  auto fits = [&](int rank) {
    for (const auto& [t, cnt] : want) {
      if (t > rank) return false;
      if (multiplicity(rank, t) < cnt) return false;
    }
    return true;
  };
  while (r <= kOCap && !fits(r)) ++r;
  if (r > kOCap)
    throw InvalidType("sum_projector: ambient power above cap");
  out.wrap_rank = r;

  const ChangeOfBasis& O = change_of_basis_O(r);
  int dim = 0;
  for (int t : types) dim += 2 * t + 1;

  std::vector<int> shape{dim};
  shape.insert(shape.end(), r, 3);
  out.p = Tensor(shape);
  const int n_cols = ipow3(r);

  std::map<int, std::size_t> next_copy;  // type -> next unused group index
  int row_out = 0;
  for (int t : types) {
    // Find the (next_copy[t])-th group of this type.
    std::size_t seen = 0;
    int r0 = -1;
    for (const auto& [gt, gr0] : O.groups) {
      if (gt != t) continue;
      if (seen++ == next_copy[t]) {
        r0 = gr0;
        break;
      }
    }
    if (r0 < 0) throw Error("sum_projector: missing copy group");
    ++next_copy[t];
    for (int a = 0; a < 2 * t + 1; ++a) {
      for (int c = 0; c < n_cols; ++c)
        out.p[static_cast<std::size_t>(row_out) * n_cols + c] =
            O.o.at({r0 + a, c});
      ++row_out;
    }
  }
  return out;
}

std::mutex sum_mutex;
std::map<std::vector<int>, SumProjector> sum_cache;

}  // namespace

const SumProjector& sum_projector(const std::vector<int>& types) {
  if (types.empty()) throw InvalidType("sum_projector: empty type list");
  std::lock_guard<std::mutex> lock(sum_mutex);
  auto it = sum_cache.find(types);
  if (it == sum_cache.end())
    it = sum_cache.emplace(types, build_sum_projector(types)).first;
  return it->second;
}

ProjectorProvider projector_provider() {
  return [](const std::vector<int>& types) -> Tensor {
    if (types.size() == 1) return projector(types[0]).p;
    return sum_projector(types).p;
  };
}

bool is_symmetric_tensor(const Tensor& t, const std::vector<int>& types,
                         double tol, Rng& rng, int n_rotations) {
  if (static_cast<int>(types.size()) != t.rank())
    throw ShapeMismatch("is_symmetric_tensor: one type per axis");
  for (int k = 0; k < t.rank(); ++k)
    if (t.shape()[k] != 2 * types[k] + 1)
      throw ShapeMismatch("is_symmetric_tensor: axis extent does not match type");
  double scale = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    scale = std::max(scale, std::abs(t[i]));
  for (int k = 0; k < n_rotations; ++k) {
    const Rotation R = random_rotation(rng);
    Tensor rotated = t;
    for (int axis = 0; axis < t.rank(); ++axis) {
      const Tensor D = irrep_matrix(types[axis], R);
      rotated = apply_matrix_axis(rotated, D, axis, false);
    }
    if (max_abs_diff(rotated, t) > tol * (1.0 + scale)) return false;
  }
  return true;
}

}  // namespace so3tengen::so3
