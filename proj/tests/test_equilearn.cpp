#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "so3tengen/equilearn.hpp"
#include "so3tengen/equivar.hpp"
#include "so3tengen/json_common.hpp"
#include "so3tengen/so3rep.hpp"

using namespace so3tengen;
using namespace so3tengen::learn;

namespace {

Tensor eye(double s = 1.0) {
  Tensor t({3, 3});
  for (int i = 0; i < 3; ++i) t.at({i, i}) = s;
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  return contract(a, b, {{1, 0}});
}

Tensor tr(const Tensor& m) { return permute(m, {1, 0}); }

double trace(const Tensor& m) { return m[0] + m[4] + m[8]; }

double det3(const Tensor& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Tensor random_mat(Rng& rng, double amp = 1.0) {
  Tensor t({3, 3});
  for (int i = 0; i < 9; ++i) t[i] = amp * rng.uniform(-1.0, 1.0);
  return t;
}

Tensor conjugate(const so3::Rotation& R, const Tensor& m) {
  return so3::rotate_cartesian(R, m);
}

MLPParams single_param_net(double w0) {
  MLPParams p;
  p.w = {Tensor({1, 1})};
  p.b = {Tensor({1})};
  p.w[0][0] = w0;
  return p;
}

double relerr(double a, double b) {
  return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b)));
}

// Gram-Schmidt span for map-level comparisons.
struct Span {
  std::vector<std::vector<double>> basis;
  void add(std::vector<double> r) {
    project(r);
    double n = 0;
    for (double x : r) n += x * x;
    n = std::sqrt(n);
    if (n > 1e-10) {
      for (double& x : r) x /= n;
      basis.push_back(std::move(r));
    }
  }
  void project(std::vector<double>& r) const {
    for (const auto& q : basis) {
      double d = 0;
      for (std::size_t i = 0; i < r.size(); ++i) d += q[i] * r[i];
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d * q[i];
    }
  }
  double residual(std::vector<double> r) const {
    project(r);
    double n = 0;
    for (double x : r) n += x * x;
    return std::sqrt(n);
  }
};

std::vector<double> flatten_over(const std::vector<Tensor>& ts) {
  std::vector<double> row;
  for (const auto& t : ts)
    for (std::size_t i = 0; i < t.size(); ++i) row.push_back(t[i]);
  return row;
}

}  // namespace

TEST_CASE("linear law") {
  CHECK(frobenius_norm(linear_law(eye(), 1.3, 0.7)) == 0.0);
  CHECK(max_abs_diff(linear_law(eye(2.0), 1.0, 1.0), eye(5.0)) < 1e-14);
}

TEST_CASE("linear law on symmetric input stays symmetric") {
  Rng rng(11);
  Tensor F = random_mat(rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) F.at({i, j}) = F.at({j, i});
  const Tensor P = linear_law(F, 0.8, 1.7);
  CHECK(max_abs_diff(P, tr(P)) < 1e-14);

  for (int k = 0; k < 5; ++k) {
    const so3::Rotation R = so3::random_rotation(rng);
    CHECK(max_abs_diff(linear_law(conjugate(R, F), 0.8, 1.7),
                       conjugate(R, P)) < 1e-10);
  }
}

TEST_CASE("neo-hookean law") {
  CHECK(frobenius_norm(neo_hookean(eye(), 1.0, 1.0)) == 0.0);
  const double c = 2.0;
  const Tensor got = neo_hookean(eye(c), 1.0, 1.0);
  CHECK(max_abs_diff(got, eye(c * c - 1.0 + 3.0 * std::log(c))) < 1e-12);

  Rng rng(13);
  for (int k = 0; k < 5; ++k) {
    const Tensor F = eqv::combine({eye(), random_mat(rng, 0.3)}, {1.0, 1.0});
    REQUIRE(det3(F) > 0);
    const Tensor P = neo_hookean(F, 1.0, 1.0);
    const so3::Rotation R = so3::random_rotation(rng);
    CHECK(max_abs_diff(neo_hookean(conjugate(R, F), 1.0, 1.0),
                       conjugate(R, P)) < 1e-10);
  }

  Tensor bad = eye();
  bad.at({2, 2}) = -1.0;
  CHECK_THROWS_AS(neo_hookean(bad, 1.0, 1.0), NonPhysicalDeformation);
  CHECK_THROWS_AS(neo_hookean(Tensor({3, 3}), 1.0, 1.0),
                  NonPhysicalDeformation);
}

TEST_CASE("deformation sampling") {
  Rng a(21), b(21);
  const Tensor fa = sample_deformation(a, 0.3);
  const Tensor fb = sample_deformation(b, 0.3);
  CHECK(max_abs_diff(fa, fb) == 0.0);

  Rng rng(22);
  for (int k = 0; k < 500; ++k) {
    const Tensor F = sample_deformation(rng, 0.3);
    CHECK(det3(F) > 0.1);
  }
  const Tensor tight = sample_deformation(rng, 0.05);
  CHECK(max_abs_diff(tight, eye()) <= 0.05);

  // Acceptance rate of the det floor at amplitude 0.3, measured on raw
  // draws: far above 99%.
  Rng mc(23);
  int ok = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    Tensor F = eye();
    for (int i = 0; i < 9; ++i) F[i] += 0.3 * mc.uniform(-1.0, 1.0);
    if (det3(F) > 0.1) ++ok;
  }
  CHECK(ok > n * 99 / 100);
}

TEST_CASE("invariant features") {
  const std::vector<double> at_id = feature_invariants(eye());
  REQUIRE(at_id.size() == 5);
  for (double x : at_id) CHECK(x == doctest::Approx(3.0).epsilon(1e-14));

  Tensor D({3, 3});
  D.at({0, 0}) = 1;
  D.at({1, 1}) = 2;
  D.at({2, 2}) = 3;
  const std::vector<double> diag = feature_invariants(D);
  const std::vector<double> want{6, 14, 14, 36, 36};
  for (int i = 0; i < 5; ++i)
    CHECK(diag[i] == doctest::Approx(want[i]).epsilon(1e-14));

  Rng rng(29);
  const Tensor F = random_mat(rng);
  const std::vector<double> f = feature_invariants(F);
  CHECK(f[0] == doctest::Approx(trace(F)).epsilon(1e-13));
  CHECK(f[1] == doctest::Approx(trace(matmul(F, tr(F)))).epsilon(1e-13));
  CHECK(f[2] == doctest::Approx(trace(matmul(F, F))).epsilon(1e-13));
  CHECK(f[3] == doctest::Approx(trace(matmul(matmul(F, F), F))).epsilon(1e-13));
  CHECK(f[4] ==
        doctest::Approx(trace(matmul(matmul(F, F), tr(F)))).epsilon(1e-13));
  CHECK(f[1] != doctest::Approx(f[2]).epsilon(1e-6));  // transpose matters

  for (int k = 0; k < 5; ++k) {
    const so3::Rotation R = so3::random_rotation(rng);
    const std::vector<double> g = feature_invariants(conjugate(R, F));
    for (int i = 0; i < 5; ++i)
      CHECK(std::abs(g[i] - f[i]) < 1e-10 * (1.0 + std::abs(f[i])));
  }
}

TEST_CASE("equivariant features") {
  const std::vector<Tensor> at_id = equivariant_features(eye());
  REQUIRE(at_id.size() == 7);
  for (const auto& e : at_id) CHECK(max_abs_diff(e, eye()) < 1e-14);

  Rng rng(31);
  const Tensor F = random_mat(rng);
  const std::vector<Tensor> feats = equivariant_features(F);
  CHECK(max_abs_diff(feats[0], eye()) == 0.0);
  CHECK(max_abs_diff(feats[1], F) == 0.0);
  CHECK(max_abs_diff(feats[2], tr(F)) < 1e-15);
  CHECK(max_abs_diff(feats[3], matmul(F, F)) < 1e-14);
  CHECK(max_abs_diff(feats[4], matmul(F, tr(F))) < 1e-14);
  CHECK(max_abs_diff(feats[5], matmul(tr(F), F)) < 1e-14);
  CHECK(max_abs_diff(feats[6], tr(matmul(F, F))) < 1e-14);

  Tensor S = eqv::combine({F, tr(F)}, {0.5, 0.5});
  const std::vector<Tensor> sym = equivariant_features(S);
  CHECK(max_abs_diff(sym[3], sym[4]) < 1e-13);
  CHECK(max_abs_diff(sym[4], sym[5]) < 1e-13);
  CHECK(max_abs_diff(sym[5], sym[6]) < 1e-13);

  for (int k = 0; k < 5; ++k) {
    const so3::Rotation R = so3::random_rotation(rng);
    const std::vector<Tensor> moved = equivariant_features(conjugate(R, F));
    for (int i = 0; i < 7; ++i)
      CHECK(max_abs_diff(moved[i], conjugate(R, feats[i])) < 1e-10);
  }
}

TEST_CASE("the seven features span the degree-2 equivariant basis") {
  const inv::Signature sig = inv::Signature::parse("cart:2");
  const eqv::EquivariantBasis basis =
      eqv::equivariant_basis(sig, inv::Slot::cart(2), 2);
  REQUIRE(basis.elements.size() == 7);

  Rng rng(37);
  std::vector<Tensor> probes;
  for (int k = 0; k < 6; ++k) probes.push_back(random_mat(rng));

  Span from_basis, from_features;
  for (const auto& e : basis.elements) {
    std::vector<Tensor> vals;
    for (const auto& F : probes)
      vals.push_back(eqv::evaluate_basis_element(e, {{0, F}}));
    from_basis.add(flatten_over(vals));
  }
  for (int i = 0; i < 7; ++i) {
    std::vector<Tensor> vals;
    for (const auto& F : probes) vals.push_back(equivariant_features(F)[i]);
    from_features.add(flatten_over(vals));
  }
  REQUIRE(from_basis.basis.size() == 7);
  REQUIRE(from_features.basis.size() == 7);
  for (int i = 0; i < 7; ++i) {
    std::vector<Tensor> vals;
    for (const auto& F : probes) vals.push_back(equivariant_features(F)[i]);
    CHECK(from_basis.residual(flatten_over(vals)) < 1e-8);
  }
  for (const auto& e : basis.elements) {
    std::vector<Tensor> vals;
    for (const auto& F : probes)
      vals.push_back(eqv::evaluate_basis_element(e, {{0, F}}));
    CHECK(from_features.residual(flatten_over(vals)) < 1e-8);
  }
}

TEST_CASE("datasets carry exact labels") {
  Rng rng(41);
  const auto data = make_dataset(32, rng, 0.3, 1.0, 1.0);
  REQUIRE(data.size() == 32);
  for (const auto& s : data) {
    CHECK(det3(s.F) > 0.1);
    CHECK(max_abs_diff(s.P, neo_hookean(s.F, 1.0, 1.0)) == 0.0);
  }

  std::ostringstream os;
  dump_jsonl(data, os);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    const Json j = Json::parse(line);
    REQUIRE(j.at("F").size() == 9);
    REQUIRE(j.at("P").size() == 9);
    for (int i = 0; i < 9; ++i) {
      CHECK(j.at("F")[i].get<double>() == data[rows].F[i]);
      CHECK(j.at("P")[i].get<double>() == data[rows].P[i]);
    }
    ++rows;
  }
  CHECK(rows == 32);
}

TEST_CASE("mlp forward") {
  MLPParams lin;
  lin.w = {Tensor({2, 3})};
  lin.b = {Tensor({2})};
  double vals[] = {1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 6; ++i) lin.w[0][i] = vals[i];
  lin.b[0][0] = 0.5;
  lin.b[0][1] = -1.0;
  lin.act = Activation::Identity;
  const std::vector<double> y = mlp_apply(lin, {1, 1, 1});
  REQUIRE(y.size() == 2);
  CHECK(y[0] == doctest::Approx(6.5).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(14.0).epsilon(1e-15));
  CHECK_THROWS_AS(mlp_apply(lin, {1, 1}), ShapeMismatch);

  Rng rng(43);
  const MLPParams zero = zeros_like(mlp_init({5, 8, 7}, rng));
  for (double v : mlp_apply(zero, {1, 2, 3, 4, 5})) CHECK(v == 0.0);

  Rng ra(44), rb(44);
  const MLPParams pa = mlp_init({5, 8, 7}, ra);
  const MLPParams pb = mlp_init({5, 8, 7}, rb);
  CHECK(max_abs_diff(pa.w[0], pb.w[0]) == 0.0);
  CHECK(max_abs_diff(pa.w[1], pb.w[1]) == 0.0);
}

TEST_CASE("mlp gradients match finite differences") {
  Rng rng(47);
  MLPParams p = mlp_init({3, 4, 2}, rng);
  const std::vector<double> x{0.3, -0.8, 0.5};
  const std::vector<double> u{1.2, -0.7};
  auto f = [&](const MLPParams& q) {
    const std::vector<double> y = mlp_apply(q, x);
    return u[0] * y[0] + u[1] * y[1];
  };
  const MLPParams g = mlp_gradients(p, x, u);
  const double h = 1e-5;
  for (std::size_t layer = 0; layer < p.w.size(); ++layer) {
    for (std::size_t i = 0; i < p.w[layer].size(); ++i) {
      MLPParams q = p;
      q.w[layer][i] += h;
      const double up = f(q);
      q.w[layer][i] -= 2 * h;
      const double dn = f(q);
      CHECK(relerr(g.w[layer][i], (up - dn) / (2 * h)) < 1e-5);
    }
    for (std::size_t i = 0; i < p.b[layer].size(); ++i) {
      MLPParams q = p;
      q.b[layer][i] += h;
      const double up = f(q);
      q.b[layer][i] -= 2 * h;
      const double dn = f(q);
      CHECK(relerr(g.b[layer][i], (up - dn) / (2 * h)) < 1e-5);
    }
  }
}

TEST_CASE("model forward") {
  Rng rng(53);
  const Tensor F = sample_deformation(rng, 0.3);

  SUBCASE("exact coefficients on the seven features reproduce the law") {
    const std::vector<Tensor> feats = equivariant_features(F);
    const double mu = 1.0, lambda = 1.0;
    std::vector<double> coeffs{lambda * std::log(det3(F)) - mu, 0, 0, 0,
                               mu, 0, 0};
    CHECK(max_abs_diff(eqv::combine(feats, coeffs),
                       neo_hookean(F, mu, lambda)) < 1e-12);
  }

  SUBCASE("zero networks predict zero") {
    for (Variant v : {Variant::Mlp, Variant::Equi3, Variant::Equi7}) {
      const MLPParams z = zeros_like(
          mlp_init({variant_inputs(v), 64, 64, variant_outputs(v)}, rng));
      CHECK(frobenius_norm(model_forward(v, z, F)) == 0.0);
    }
  }

  SUBCASE("equivariant variants intertwine, the baseline does not") {
    for (Variant v : {Variant::Equi3, Variant::Equi7}) {
      const MLPParams p = mlp_init(
          {variant_inputs(v), 64, 64, variant_outputs(v)}, rng);
      for (int k = 0; k < 10; ++k) {
        const so3::Rotation R = so3::random_rotation(rng);
        const Tensor out = model_forward(v, p, F);
        CHECK(max_abs_diff(model_forward(v, p, conjugate(R, F)),
                           conjugate(R, out)) <=
              1e-6 * (1.0 + frobenius_norm(out)));
      }
    }
    const MLPParams p = mlp_init({9, 64, 64, 9}, rng);
    int violated = 0;
    for (int k = 0; k < 10; ++k) {
      const so3::Rotation R = so3::random_rotation(rng);
      const Tensor out = model_forward(Variant::Mlp, p, F);
      const double gap = max_abs_diff(model_forward(Variant::Mlp, p,
                                                    conjugate(R, F)),
                                      conjugate(R, out));
      if (gap > 1e-4 * (1.0 + frobenius_norm(out))) ++violated;
    }
    CHECK(violated >= 8);
  }

  SUBCASE("variant names") {
    for (Variant v : {Variant::Mlp, Variant::Equi3, Variant::Equi7})
      CHECK(variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("equi5"), Error);
  }
}

TEST_CASE("batch loss and full-model gradients") {
  Rng rng(59);
  const auto data = make_dataset(10, rng, 0.3, 1.0, 1.0);

  for (Variant v : {Variant::Mlp, Variant::Equi3, Variant::Equi7}) {
    MLPParams p = mlp_init(
        {variant_inputs(v), 8, 8, variant_outputs(v)}, rng);

    // Definition check on a single sample.
    const double l1 = batch_mse(v, p, {data[0]});
    const Tensor pred = model_forward(v, p, data[0].F);
    double acc = 0;
    for (int i = 0; i < 9; ++i) {
      const double d = pred[i] - data[0].P[i];
      acc += d * d;
    }
    CHECK(l1 == doctest::Approx(acc / 9.0).epsilon(1e-13));

    MLPParams g = zeros_like(p);
    const double loss = batch_mse_and_gradients(v, p, data, g);
    CHECK(loss == doctest::Approx(batch_mse(v, p, data)).epsilon(1e-15));

    const double h = 1e-4;
    for (std::size_t layer = 0; layer < p.w.size(); ++layer) {
      const std::size_t stride = std::max<std::size_t>(1, p.w[layer].size() / 7);
      for (std::size_t i = 0; i < p.w[layer].size(); i += stride) {
        MLPParams q = p;
        q.w[layer][i] += h;
        const double up = batch_mse(v, q, data);
        q.w[layer][i] -= 2 * h;
        const double dn = batch_mse(v, q, data);
        CHECK(relerr(g.w[layer][i], (up - dn) / (2 * h)) < 1e-4);
      }
      MLPParams q = p;
      q.b[layer][0] += h;
      const double up = batch_mse(v, q, data);
      q.b[layer][0] -= 2 * h;
      const double dn = batch_mse(v, q, data);
      CHECK(relerr(g.b[layer][0], (up - dn) / (2 * h)) < 1e-4);
    }
  }
}

TEST_CASE("adam and the schedule") {
  SUBCASE("hand-computed first step") {
    MLPParams p = single_param_net(1.0);
    MLPParams g = zeros_like(p);
    g.w[0][0] = 1.0;
    AdamState st;
    st.m = zeros_like(p);
    st.v = zeros_like(p);
    adam_step(p, g, st, 5e-4);
    CHECK(std::abs(p.w[0][0] - 0.9995) < 1e-9);
    CHECK(p.b[0][0] == 0.0);  // zero gradient, zero parameter: no motion
    CHECK(st.step == 1);
  }

  SUBCASE("zero gradient without decay leaves parameters fixed") {
    MLPParams p = single_param_net(0.7);
    p.b[0][0] = -0.2;
    AdamState st;
    st.weight_decay = 0.0;
    st.m = zeros_like(p);
    st.v = zeros_like(p);
    adam_step(p, zeros_like(p), st, 5e-4);
    CHECK(p.w[0][0] == 0.7);
    CHECK(p.b[0][0] == -0.2);
  }

  SUBCASE("two identical steps follow the recurrence") {
    MLPParams p = single_param_net(2.0);
    AdamState st;
    st.weight_decay = 0.0;
    st.m = zeros_like(p);
    st.v = zeros_like(p);
    MLPParams g = zeros_like(p);
    g.w[0][0] = 0.5;
    const double lr = 5e-4;
    adam_step(p, g, st, lr);
    adam_step(p, g, st, lr);

    // Unrolled by hand from the definition.
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, gr = 0.5;
    double m = 0, v = 0, x = 2.0;
    for (int t = 1; t <= 2; ++t) {
      m = b1 * m + (1 - b1) * gr;
      v = b2 * v + (1 - b2) * gr * gr;
      const double mh = m / (1 - std::pow(b1, t));
      const double vh = v / (1 - std::pow(b2, t));
      x -= lr * mh / (std::sqrt(vh) + eps);
    }
    CHECK(std::abs(p.w[0][0] - x) < 1e-12);
  }

  SUBCASE("cosine schedule") {
    CHECK(cosine_lr(0, 100, 3e-3) == doctest::Approx(3e-3).epsilon(1e-15));
    CHECK(std::abs(cosine_lr(100, 100, 3e-3)) < 1e-15);
    CHECK(cosine_lr(50, 100, 3e-3) == doctest::Approx(1.5e-3).epsilon(1e-12));
    for (int s = 0; s < 100; ++s)
      CHECK(cosine_lr(s, 100, 3e-3) > cosine_lr(s + 1, 100, 3e-3));
  }
}

TEST_CASE("training runs and the metrics tables") {
  TrainConfig cfg;
  // Defaults frozen: the experiment gate depends on them.
  CHECK(cfg.train_sizes == std::vector<int>{100, 1000, 5000});
  CHECK(cfg.reps == 3);
  CHECK(cfg.steps_small == 16000);
  CHECK(cfg.steps_large == 16000);
  CHECK(cfg.batch_size == 15);
  CHECK(cfg.lr == 5e-4);
  CHECK(cfg.weight_decay == 1e-8);
  CHECK(cfg.mu == 1.0);
  CHECK(cfg.lambda == 1.0);
  CHECK(cfg.amplitude == 0.3);
  CHECK(cfg.variants.size() == 3);

  cfg.train_sizes = {60};
  cfg.val_size = 40;
  cfg.test_size = 60;
  cfg.reps = 2;
  cfg.steps_small = 3000;
  cfg.batch_size = 15;
  cfg.eval_every = 100;
  cfg.variants = {Variant::Mlp, Variant::Equi7};

  const Metrics m = run_experiment(cfg, Exec::Serial);
  REQUIRE(m.runs.size() == 4);
  REQUIRE(m.aggregate.size() == 2);

  double mlp_mean = 0, equi_mean = 0;
  for (const auto& a : m.aggregate) {
    CHECK(a.mse_mean >= 0.0);
    CHECK(a.mse_std >= 0.0);
    if (a.variant == Variant::Mlp) mlp_mean = a.mse_mean;
    if (a.variant == Variant::Equi7) equi_mean = a.mse_mean;
    // Mean and deviation recomputed from the run rows.
    double s = 0, s2 = 0;
    int n = 0;
    for (const auto& r : m.runs)
      if (r.variant == a.variant && r.train_size == a.train_size) {
        s += r.test_mse;
        s2 += r.test_mse * r.test_mse;
        ++n;
      }
    CHECK(n == 2);
    CHECK(a.mse_mean == doctest::Approx(s / n).epsilon(1e-15));
    CHECK(a.mse_std ==
          doctest::Approx(std::sqrt(std::max(0.0, s2 / n - (s / n) * (s / n))))
              .epsilon(1e-9));
  }
  CHECK(equi_mean < 0.5 * mlp_mean);

  SUBCASE("determinism") {
    const Metrics m2 = run_experiment(cfg, Exec::Parallel);
    REQUIRE(m2.runs.size() == m.runs.size());
    for (std::size_t i = 0; i < m.runs.size(); ++i) {
      CHECK(m.runs[i].test_mse == m2.runs[i].test_mse);
      CHECK(m.runs[i].val_mse == m2.runs[i].val_mse);
    }
    CHECK(aggregate_csv(m) == aggregate_csv(m2));
  }

  SUBCASE("csv shapes") {
    const std::string rcsv = runs_csv(m);
    std::istringstream rs(rcsv);
    std::string line;
    std::getline(rs, line);
    CHECK(line == "variant,train_size,seed,test_mse,val_mse,wall_seconds");
    int rows = 0;
    while (std::getline(rs, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 4);

    const std::string acsv = aggregate_csv(m);
    std::istringstream as(acsv);
    std::getline(as, line);
    CHECK(line == "variant,train_size,mse_mean,mse_std");
    rows = 0;
    while (std::getline(as, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2);
    CHECK(acsv.find("equi7,60,") != std::string::npos);
  }
}

TEST_CASE("single runs expose curves and checkpoints") {
  TrainConfig cfg;
  cfg.steps_small = 200;
  cfg.eval_every = 25;
  Rng rng(61);
  const auto train = make_dataset(40, rng, 0.3, 1.0, 1.0);
  const auto val = make_dataset(20, rng, 0.3, 1.0, 1.0);
  const auto test = make_dataset(20, rng, 0.3, 1.0, 1.0);

  std::vector<MLPParams> checkpoints;
  const TrainOutcome out = train_model(Variant::Equi3, train, val, test, cfg,
                                       777, &checkpoints);
  CHECK(out.steps == 200);
  CHECK(!out.val_curve.empty());
  CHECK(checkpoints.size() == out.val_curve.size());
  double best = out.val_curve[0];
  for (double v : out.val_curve) best = std::min(best, v);
  CHECK(out.val_mse == best);
  CHECK(out.test_mse >= 0.0);

  const TrainOutcome rerun =
      train_model(Variant::Equi3, train, val, test, cfg, 777);
  REQUIRE(rerun.val_curve.size() == out.val_curve.size());
  for (std::size_t i = 0; i < out.val_curve.size(); ++i)
    CHECK(rerun.val_curve[i] == out.val_curve[i]);

  SUBCASE("divergence is reported") {
    TrainConfig wild = cfg;
    wild.lr = 1e200;
    wild.steps_small = 30;
    CHECK_THROWS_AS(
        train_model(Variant::Mlp, train, val, test, wild, 777),
        TrainingDiverged);
  }
}
