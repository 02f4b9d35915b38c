#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "so3tengen/rng.hpp"
#include "so3tengen/tensor.hpp"

using namespace so3tengen;

namespace {

// Independent oracle: contraction evaluated entry by entry through at(),
// with no stride precomputation shared with the implementation.
Tensor naive_contract(const Tensor& a, const Tensor& b,
                      const std::vector<std::pair<int, int>>& pairs) {
  std::vector<char> ca(a.rank(), 0), cb(b.rank(), 0);
  for (auto [x, y] : pairs) ca[x] = 1, cb[y] = 1;
  std::vector<int> fa, fb;
  for (int k = 0; k < a.rank(); ++k)
    if (!ca[k]) fa.push_back(k);
  for (int k = 0; k < b.rank(); ++k)
    if (!cb[k]) fb.push_back(k);
  std::vector<int> out_shape;
  for (int k : fa) out_shape.push_back(a.shape()[k]);
  for (int k : fb) out_shape.push_back(b.shape()[k]);
  Tensor out(out_shape);

  std::vector<int> oidx(out_shape.size(), 0);
  auto bump = [](std::vector<int>& idx, const std::vector<int>& shape) {
    for (int k = static_cast<int>(shape.size()) - 1; k >= 0; --k) {
      if (++idx[k] < shape[k]) return true;
      idx[k] = 0;
    }
    return false;
  };
  std::vector<int> sum_shape;
  for (auto [x, y] : pairs) {
    (void)y;
    sum_shape.push_back(a.shape()[x]);
  }
  do {
    std::vector<int> ia(a.rank(), 0), ib(b.rank(), 0);
    for (std::size_t k = 0; k < fa.size(); ++k) ia[fa[k]] = oidx[k];
    for (std::size_t k = 0; k < fb.size(); ++k)
      ib[fb[k]] = oidx[fa.size() + k];
    double acc = 0.0;
    std::vector<int> s(sum_shape.size(), 0);
    do {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        ia[pairs[k].first] = s[k];
        ib[pairs[k].second] = s[k];
      }
      acc += a.at(ia) * b.at(ib);
    } while (!sum_shape.empty() && bump(s, sum_shape));
    out.at(oidx) = acc;
  } while (!out_shape.empty() && bump(oidx, out_shape));
  return out;
}

Tensor random_tensor(Rng& rng, const std::vector<int>& shape) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("delta and epsilon basics") {
  const Tensor d = delta();
  CHECK(d.shape() == std::vector<int>{3, 3});
  double tr = 0;
  for (int i = 0; i < 3; ++i) tr += d.at({i, i});
  CHECK(tr == 3.0);

  const Tensor e = epsilon();
  CHECK(e.at({0, 1, 2}) == 1.0);
  CHECK(e.at({2, 1, 0}) == -1.0);
  CHECK(e.at({0, 0, 1}) == 0.0);

  // Full self-contraction of the alternating symbol.
  const Tensor s = contract(e, e, {{0, 0}, {1, 1}, {2, 2}});
  CHECK(s.rank() == 0);
  CHECK(s.value() == 6.0);
}

TEST_CASE("matrix product frozen example") {
  Tensor a({2, 2}), b({2, 2});
  a.at({0, 0}) = 1;
  a.at({0, 1}) = 2;
  a.at({1, 0}) = 3;
  a.at({1, 1}) = 4;
  b.at({0, 0}) = 5;
  b.at({0, 1}) = 6;
  b.at({1, 0}) = 7;
  b.at({1, 1}) = 8;
  const Tensor c = contract(a, b, {{1, 0}});
  CHECK(c.at({0, 0}) == 19.0);
  CHECK(c.at({0, 1}) == 22.0);
  CHECK(c.at({1, 0}) == 43.0);
  CHECK(c.at({1, 1}) == 50.0);
}

TEST_CASE("vector dot frozen example") {
  Tensor x({3}), y({3});
  for (int i = 0; i < 3; ++i) {
    x[i] = i + 1;      // (1,2,3)
    y[i] = i + 4;      // (4,5,6)
  }
  CHECK(contract(x, y, {{0, 0}}).value() == 32.0);
}

TEST_CASE("permute relabels axes") {
  Rng rng(7);
  const Tensor t = random_tensor(rng, {2, 3, 4});
  const Tensor p = permute(t, {2, 0, 1});
  CHECK(p.shape() == std::vector<int>{4, 2, 3});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 4; ++k) CHECK(p.at({k, i, j}) == t.at({i, j, k}));
  CHECK_THROWS_AS(permute(t, {0, 1}), InvalidPermutation);
  CHECK_THROWS_AS(permute(t, {0, 1, 1}), InvalidPermutation);
  CHECK_THROWS_AS(permute(t, {0, 1, 3}), InvalidPermutation);
}

TEST_CASE("contract matches naive oracle on random tensors") {
  Rng rng(123);
  for (int rep = 0; rep < 60; ++rep) {
    const int ra = 1 + static_cast<int>(rng.below(3));
    const int rb = 1 + static_cast<int>(rng.below(3));
    std::vector<int> sa(ra), sb(rb);
    for (int& e : sa) e = 2 + static_cast<int>(rng.below(2));
    for (int& e : sb) e = 2 + static_cast<int>(rng.below(2));
    // Random pairing of compatible axes.
    std::vector<std::pair<int, int>> pairs;
    std::vector<char> ub(rb, 0);
    for (int x = 0; x < ra; ++x) {
      if (rng.uniform() < 0.5) continue;
      for (int y = 0; y < rb; ++y)
        if (!ub[y] && sb[y] == sa[x]) {
          pairs.emplace_back(x, y);
          ub[y] = 1;
          break;
        }
    }
    const Tensor a = random_tensor(rng, sa);
    const Tensor b = random_tensor(rng, sb);
    const Tensor got = contract(a, b, pairs);
    const Tensor want = naive_contract(a, b, pairs);
    REQUIRE(got.shape() == want.shape());
    CHECK(max_abs_diff(got, want) < 1e-14);
  }
}

TEST_CASE("contract handles rank-0 and outer products") {
  const Tensor s = Tensor::scalar(2.5);
  Tensor v({3});
  v[0] = 1;
  v[1] = -2;
  v[2] = 0.5;
  const Tensor sv = contract(s, v, {});
  CHECK(sv.shape() == std::vector<int>{3});
  CHECK(sv[1] == -5.0);
  const Tensor vv = contract(v, v, {});
  CHECK(vv.shape() == std::vector<int>{3, 3});
  CHECK(vv.at({1, 2}) == -1.0);
}

TEST_CASE("contract rejects bad axis lists") {
  Tensor a({3, 3}), b({3, 4});
  CHECK_THROWS_AS(contract(a, b, {{0, 1}}), ShapeMismatch);
  CHECK_THROWS_AS(contract(a, b, {{0, 0}, {0, 0}}), InvalidPermutation);
  CHECK_THROWS_AS(contract(a, b, {{2, 0}}), InvalidPermutation);
}

TEST_CASE("trace_pairs matches explicit sums") {
  Rng rng(5);
  const Tensor t = random_tensor(rng, {3, 3, 3, 3});
  const Tensor tr = trace_pairs(t, {{0, 2}});
  CHECK(tr.shape() == std::vector<int>{3, 3});
  for (int j = 0; j < 3; ++j)
    for (int l = 0; l < 3; ++l) {
      double want = 0;
      for (int i = 0; i < 3; ++i) want += t.at({i, j, i, l});
      CHECK(tr.at({j, l}) == doctest::Approx(want).epsilon(1e-14));
    }
  const Tensor full = trace_pairs(t, {{0, 1}, {2, 3}});
  CHECK(full.rank() == 0);
  double want = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) want += t.at({i, i, j, j});
  CHECK(full.value() == doctest::Approx(want).epsilon(1e-14));
}
