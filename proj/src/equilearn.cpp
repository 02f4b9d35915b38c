#include "so3tengen/equilearn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "so3tengen/errors.hpp"
#include "so3tengen/json_common.hpp"

namespace so3tengen::learn {

namespace {

double det3(const Tensor& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void check_mat3(const Tensor& m, const char* who) {
  if (m.shape() != std::vector<int>{3, 3})
    throw ShapeMismatch(std::string(who) + ": expected a 3x3 tensor");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

Tensor linear_law(const Tensor& F, double mu, double lambda) {
  check_mat3(F, "linear_law");
  Tensor P({3, 3});
  const double bulk = lambda * (F[0] + F[4] + F[8] - 3.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = mu * (F[i * 3 + j] + F[j * 3 + i]);
      if (i == j) v += bulk - 2.0 * mu;
      P[i * 3 + j] = v;
    }
  return P;
}

Tensor neo_hookean(const Tensor& F, double mu, double lambda) {
  check_mat3(F, "neo_hookean");
  const double d = det3(F);
  if (!(d > 0.0))
    throw NonPhysicalDeformation("neo_hookean: det(F) = " + fmt(d));
  Tensor P({3, 3});
  const double bulk = lambda * std::log(d);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double bb = 0;  // (F F^T)_ij
      for (int k = 0; k < 3; ++k) bb += F[i * 3 + k] * F[j * 3 + k];
      P[i * 3 + j] = mu * bb + (i == j ? bulk - mu : 0.0);
    }
  return P;
}

Tensor sample_deformation(Rng& rng, double amplitude) {
  if (!(amplitude > 0.0 && amplitude < 1.0))
    throw Error("sample_deformation: amplitude must lie in (0, 1)");
  for (;;) {
    Tensor F({3, 3});
    for (int i = 0; i < 9; ++i) F[i] = amplitude * rng.uniform(-1.0, 1.0);
    F[0] += 1.0;
    F[4] += 1.0;
    F[8] += 1.0;
    if (det3(F) > 0.1) return F;
  }
}

std::vector<double> feature_invariants(const Tensor& F) {
  check_mat3(F, "feature_invariants");
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0;
  for (int i = 0; i < 3; ++i) {
    t1 += F[i * 3 + i];
    for (int j = 0; j < 3; ++j) {
      t2 += F[i * 3 + j] * F[i * 3 + j];
      t3 += F[i * 3 + j] * F[j * 3 + i];
      for (int k = 0; k < 3; ++k) {
        t4 += F[i * 3 + j] * F[j * 3 + k] * F[k * 3 + i];
        t5 += F[i * 3 + j] * F[j * 3 + k] * F[i * 3 + k];
      }
    }
  }
  return {t1, t2, t3, t4, t5};
}

std::vector<Tensor> equivariant_features(const Tensor& F) {
  check_mat3(F, "equivariant_features");
  std::vector<Tensor> feats(7, Tensor({3, 3}));
  for (int i = 0; i < 3; ++i) feats[0][i * 3 + i] = 1.0;
  feats[1] = F;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      feats[2][i * 3 + j] = F[j * 3 + i];
      double ff = 0, fft = 0, ftf = 0;
      for (int k = 0; k < 3; ++k) {
        ff += F[i * 3 + k] * F[k * 3 + j];
        fft += F[i * 3 + k] * F[j * 3 + k];
        ftf += F[k * 3 + i] * F[k * 3 + j];
      }
      feats[3][i * 3 + j] = ff;
      feats[4][i * 3 + j] = fft;
      feats[5][i * 3 + j] = ftf;
      feats[6][j * 3 + i] = ff;  // (F F)^T = F^T F^T
    }
  return feats;
}

std::vector<DeformationSample> make_dataset(int n, Rng& rng, double amplitude,
                                            double mu, double lambda) {
  std::vector<DeformationSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    DeformationSample s;
    s.F = sample_deformation(rng, amplitude);
    s.P = neo_hookean(s.F, mu, lambda);
    out.push_back(std::move(s));
  }
  return out;
}

void dump_jsonl(const std::vector<DeformationSample>& samples,
                std::ostream& os) {
  for (const auto& s : samples) {
    Json j;
    j["F"] = std::vector<double>(s.F.data(), s.F.data() + 9);
    j["P"] = std::vector<double>(s.P.data(), s.P.data() + 9);
    os << j.dump() << '\n';
  }
}

MLPParams mlp_init(const std::vector<int>& dims, Rng& rng, Activation act) {
  if (dims.size() < 2) throw ShapeMismatch("mlp_init: need at least 2 dims");
  MLPParams p;
  p.act = act;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    if (in <= 0 || out <= 0) throw ShapeMismatch("mlp_init: bad dimension");
    Tensor w({out, in});
    const double scale = std::sqrt(6.0 / (in + out));
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = rng.uniform(-scale, scale);
    p.w.push_back(std::move(w));
    p.b.push_back(Tensor({out}));
  }
  return p;
}

MLPParams zeros_like(const MLPParams& p) {
  MLPParams z;
  z.act = p.act;
  for (const auto& w : p.w) z.w.push_back(Tensor(w.shape()));
  for (const auto& b : p.b) z.b.push_back(Tensor(b.shape()));
  return z;
}

namespace {

// Reused activation storage for the hot training loop.
struct Workspace {
  std::vector<std::vector<double>> a;  // a[0] = input, a[L] = output
};

void size_workspace(const MLPParams& p, Workspace& ws) {
  ws.a.resize(p.w.size() + 1);
  ws.a[0].resize(static_cast<std::size_t>(p.w[0].shape()[1]));
  for (std::size_t l = 0; l < p.w.size(); ++l)
    ws.a[l + 1].resize(static_cast<std::size_t>(p.w[l].shape()[0]));
}

void forward_into(const MLPParams& p, Workspace& ws) {
  const std::size_t L = p.w.size();
  for (std::size_t l = 0; l < L; ++l) {
    const int out = p.w[l].shape()[0], in = p.w[l].shape()[1];
    const double* wd = p.w[l].data();
    const double* x = ws.a[l].data();
    double* y = ws.a[l + 1].data();
    for (int o = 0; o < out; ++o) {
      double acc = p.b[l][static_cast<std::size_t>(o)];
      const double* row = wd + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
    if (l + 1 < L && p.act == Activation::Tanh)
      for (int o = 0; o < out; ++o) y[o] = std::tanh(y[o]);
  }
}

// Adds parameter gradients of <upstream, output> into grads; activations in
// ws must come from a matching forward_into call.
void backward_into(const MLPParams& p, const Workspace& ws,
                   const std::vector<double>& upstream, MLPParams& grads,
                   std::vector<double>& delta, std::vector<double>& prev) {
  const std::size_t L = p.w.size();
  delta = upstream;
  for (std::size_t l = L; l-- > 0;) {
    const int out = p.w[l].shape()[0], in = p.w[l].shape()[1];
    const double* x = ws.a[l].data();
    double* gw = grads.w[l].data();
    for (int o = 0; o < out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      grads.b[l][static_cast<std::size_t>(o)] += d;
      double* row = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += d * x[i];
    }
    if (l == 0) break;
    prev.assign(static_cast<std::size_t>(in), 0.0);
    const double* wd = p.w[l].data();
    for (int o = 0; o < out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      const double* row = wd + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
    }
    if (p.act == Activation::Tanh)
      for (int i = 0; i < in; ++i) {
        const double t = ws.a[l][static_cast<std::size_t>(i)];
        prev[static_cast<std::size_t>(i)] *= 1.0 - t * t;
      }
    delta = prev;
  }
}

}  // namespace

std::vector<double> mlp_apply(const MLPParams& p,
                              const std::vector<double>& x) {
  if (p.w.empty()) throw ShapeMismatch("mlp_apply: empty network");
  if (static_cast<int>(x.size()) != p.w[0].shape()[1])
    throw ShapeMismatch("mlp_apply: input width mismatch");
  Workspace ws;
  size_workspace(p, ws);
  ws.a[0] = x;
  forward_into(p, ws);
  return ws.a.back();
}

MLPParams mlp_gradients(const MLPParams& p, const std::vector<double>& x,
                        const std::vector<double>& upstream) {
  if (static_cast<int>(x.size()) != p.w[0].shape()[1])
    throw ShapeMismatch("mlp_gradients: input width mismatch");
  if (static_cast<int>(upstream.size()) != p.w.back().shape()[0])
    throw ShapeMismatch("mlp_gradients: upstream width mismatch");
  Workspace ws;
  size_workspace(p, ws);
  ws.a[0] = x;
  forward_into(p, ws);
  MLPParams grads = zeros_like(p);
  std::vector<double> delta, prev;
  backward_into(p, ws, upstream, grads, delta, prev);
  return grads;
}

namespace {

// Network inputs centered at the reference configuration F = I, where the
// stress vanishes: the raw entries sit near 1 on the diagonal and the
// invariants near 3, far enough from zero to saturate tanh units at
// initialization.
std::vector<double> model_inputs(Variant v, const Tensor& F) {
  if (v == Variant::Mlp) {
    std::vector<double> x(F.data(), F.data() + 9);
    x[0] -= 1.0;
    x[4] -= 1.0;
    x[8] -= 1.0;
    return x;
  }
  std::vector<double> x = feature_invariants(F);
  for (double& t : x) t -= 3.0;
  return x;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Mlp:
      return "mlp";
    case Variant::Equi3:
      return "equi3";
    case Variant::Equi7:
      return "equi7";
  }
  return "mlp";
}

Variant variant_from_string(const std::string& s) {
  if (s == "mlp") return Variant::Mlp;
  if (s == "equi3") return Variant::Equi3;
  if (s == "equi7") return Variant::Equi7;
  throw Error("unknown model variant: " + s);
}

int variant_inputs(Variant v) { return v == Variant::Mlp ? 9 : 5; }

int variant_outputs(Variant v) {
  switch (v) {
    case Variant::Mlp:
      return 9;
    case Variant::Equi3:
      return 3;
    case Variant::Equi7:
      return 7;
  }
  return 9;
}

namespace {

// Inputs and matrix features do not depend on the parameters, so a training
// run computes them once per sample.
struct PreparedSample {
  std::vector<double> x;
  std::vector<Tensor> feats;  // empty for the mlp variant
  const Tensor* P = nullptr;
};

std::vector<PreparedSample> prepare(Variant v,
                                    const std::vector<DeformationSample>& data) {
  std::vector<PreparedSample> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    PreparedSample& s = out[i];
    s.x = model_inputs(v, data[i].F);
    if (v != Variant::Mlp) {
      s.feats = equivariant_features(data[i].F);
      if (v == Variant::Equi3) s.feats.resize(3);
    }
    s.P = &data[i].P;
  }
  return out;
}

void predict(Variant v, const std::vector<double>& y,
             const PreparedSample& s, double* pred) {
  if (v == Variant::Mlp) {
    for (int i = 0; i < 9; ++i) pred[i] = y[static_cast<std::size_t>(i)];
    return;
  }
  for (int i = 0; i < 9; ++i) pred[i] = 0.0;
  for (std::size_t f = 0; f < s.feats.size(); ++f)
    for (int i = 0; i < 9; ++i) pred[i] += y[f] * s.feats[f][i];
}

// Mean squared error over the slice; with grads != nullptr also accumulates
// d(mse)/d(params).
double prepared_loss(Variant v, const MLPParams& p,
                     const std::vector<PreparedSample>& set,
                     std::size_t begin, std::size_t count, MLPParams* grads,
                     Workspace& ws) {
  double loss = 0;
  const double inv = 1.0 / (9.0 * static_cast<double>(count));
  std::vector<double> upstream(
      static_cast<std::size_t>(p.w.back().shape()[0]));
  std::vector<double> delta, prev;
  double pred[9], dp[9];
  for (std::size_t k = 0; k < count; ++k) {
    const PreparedSample& s = set[(begin + k) % set.size()];
    ws.a[0] = s.x;
    forward_into(p, ws);
    predict(v, ws.a.back(), s, pred);
    for (int i = 0; i < 9; ++i) {
      const double d = pred[i] - (*s.P)[i];
      loss += d * d * inv;
      dp[i] = 2.0 * d * inv;
    }
    if (!grads) continue;
    if (v == Variant::Mlp) {
      for (int i = 0; i < 9; ++i) upstream[static_cast<std::size_t>(i)] = dp[i];
    } else {
      for (std::size_t f = 0; f < s.feats.size(); ++f) {
        double acc = 0;
        for (int i = 0; i < 9; ++i) acc += dp[i] * s.feats[f][i];
        upstream[f] = acc;
      }
    }
    backward_into(p, ws, upstream, *grads, delta, prev);
  }
  return loss;
}

void zero_params(MLPParams& p) {
  for (auto& w : p.w) std::fill(w.data(), w.data() + w.size(), 0.0);
  for (auto& b : p.b) std::fill(b.data(), b.data() + b.size(), 0.0);
}

}  // namespace

Tensor model_forward(Variant v, const MLPParams& p, const Tensor& F) {
  check_mat3(F, "model_forward");
  const std::vector<double> y = mlp_apply(p, model_inputs(v, F));
  Tensor out({3, 3});
  if (v == Variant::Mlp) {
    for (int i = 0; i < 9; ++i) out[i] = y[static_cast<std::size_t>(i)];
    return out;
  }
  std::vector<Tensor> feats = equivariant_features(F);
  const std::size_t k = v == Variant::Equi3 ? 3 : 7;
  for (std::size_t f = 0; f < k; ++f)
    for (int i = 0; i < 9; ++i) out[i] += y[f] * feats[f][i];
  return out;
}

double batch_mse(Variant v, const MLPParams& p,
                 const std::vector<DeformationSample>& data) {
  if (data.empty()) throw ShapeMismatch("batch_mse: empty batch");
  const auto set = prepare(v, data);
  Workspace ws;
  size_workspace(p, ws);
  return prepared_loss(v, p, set, 0, set.size(), nullptr, ws);
}

double batch_mse_and_gradients(Variant v, const MLPParams& p,
                               const std::vector<DeformationSample>& data,
                               MLPParams& grads) {
  if (data.empty()) throw ShapeMismatch("batch_mse_and_gradients: empty batch");
  const auto set = prepare(v, data);
  Workspace ws;
  size_workspace(p, ws);
  return prepared_loss(v, p, set, 0, set.size(), &grads, ws);
}

void adam_step(MLPParams& params, const MLPParams& grads, AdamState& state,
               double lr) {
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](Tensor& x, const Tensor& g, Tensor& m, Tensor& v) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g[i] + state.weight_decay * x[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      x[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.eps);
    }
  };
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    update(params.w[l], grads.w[l], state.m.w[l], state.v.w[l]);
    update(params.b[l], grads.b[l], state.m.b[l], state.v.b[l]);
  }
}

double cosine_lr(int step, int total_steps, double base_lr) {
  return base_lr *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                         static_cast<double>(total_steps))) /
         2.0;
}

TrainOutcome train_model(Variant v,
                         const std::vector<DeformationSample>& train,
                         const std::vector<DeformationSample>& val,
                         const std::vector<DeformationSample>& test,
                         const TrainConfig& cfg, std::uint64_t init_seed,
                         std::vector<MLPParams>* checkpoints) {
  if (train.empty() || val.empty() || test.empty())
    throw ShapeMismatch("train_model: empty dataset");
  Rng rng(init_seed);
  MLPParams params =
      mlp_init({variant_inputs(v), 64, 64, variant_outputs(v)}, rng);
  MLPParams grads = zeros_like(params);
  AdamState st;
  st.weight_decay = cfg.weight_decay;
  st.m = zeros_like(params);
  st.v = zeros_like(params);

  const auto prep_train = prepare(v, train);
  const auto prep_val = prepare(v, val);
  const auto prep_test = prepare(v, test);
  Workspace ws;
  size_workspace(params, ws);

  const int n = static_cast<int>(train.size());
  const int steps = n <= cfg.size_pivot ? cfg.steps_small : cfg.steps_large;
  const int bsz = cfg.batch_size > 0 && cfg.batch_size < n ? cfg.batch_size : n;

  TrainOutcome out;
  out.steps = steps;
  out.val_mse = std::numeric_limits<double>::infinity();
  auto diverged = [&](int step) {
    throw TrainingDiverged("non-finite loss: variant " + to_string(v) +
                           ", seed " + std::to_string(init_seed) + ", step " +
                           std::to_string(step));
  };
  for (int step = 0; step < steps; ++step) {
    const double lr = cosine_lr(step, steps, cfg.lr);
    zero_params(grads);
    const std::size_t begin =
        static_cast<std::size_t>(step) * static_cast<std::size_t>(bsz) %
        static_cast<std::size_t>(n);
    const double loss = prepared_loss(v, params, prep_train, begin,
                                      static_cast<std::size_t>(bsz), &grads, ws);
    if (!std::isfinite(loss)) diverged(step);
    adam_step(params, grads, st, lr);

    if ((step + 1) % cfg.eval_every == 0 || step + 1 == steps) {
      const double vl =
          prepared_loss(v, params, prep_val, 0, prep_val.size(), nullptr, ws);
      if (!std::isfinite(vl)) diverged(step);
      out.val_curve.push_back(vl);
      if (checkpoints) checkpoints->push_back(params);
      if (vl < out.val_mse) {
        out.val_mse = vl;
        out.test_mse = prepared_loss(v, params, prep_test, 0,
                                     prep_test.size(), nullptr, ws);
      }
    }
  }
  return out;
}

Metrics run_experiment(const TrainConfig& cfg, Exec mode) {
  if (cfg.train_sizes.empty() || cfg.variants.empty() || cfg.reps < 1)
    throw Error("run_experiment: empty grid");

  // Datasets depend on (seed, size, rep) so all variants see the same data.
  struct Cell {
    std::size_t v, s, r;
  };
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < cfg.variants.size(); ++v)
    for (std::size_t s = 0; s < cfg.train_sizes.size(); ++s)
      for (std::size_t r = 0; r < static_cast<std::size_t>(cfg.reps); ++r)
        cells.push_back({v, s, r});

  const std::size_t n_data = cfg.train_sizes.size() *
                             static_cast<std::size_t>(cfg.reps);
  std::vector<std::vector<DeformationSample>> train_sets(n_data), val_sets(n_data),
      test_sets(n_data);
  for (std::size_t s = 0; s < cfg.train_sizes.size(); ++s)
    for (std::size_t r = 0; r < static_cast<std::size_t>(cfg.reps); ++r) {
      Rng rng = Rng::from_path(cfg.seed, 1, s, r);
      const std::size_t at = s * static_cast<std::size_t>(cfg.reps) + r;
      train_sets[at] =
          make_dataset(cfg.train_sizes[s], rng, cfg.amplitude, cfg.mu, cfg.lambda);
      val_sets[at] =
          make_dataset(cfg.val_size, rng, cfg.amplitude, cfg.mu, cfg.lambda);
      test_sets[at] =
          make_dataset(cfg.test_size, rng, cfg.amplitude, cfg.mu, cfg.lambda);
    }

  Metrics metrics;
  metrics.runs.resize(cells.size());
  std::vector<std::string> failures(cells.size());
  parallel_for(
      cells.size(),
      [&](std::size_t i) {
        const Cell c = cells[i];
        const std::size_t at = c.s * static_cast<std::size_t>(cfg.reps) + c.r;
        RunRecord rec;
        rec.variant = cfg.variants[c.v];
        rec.train_size = cfg.train_sizes[c.s];
        rec.rep = static_cast<int>(c.r);
        const std::uint64_t init_seed =
            Rng::from_path(cfg.seed, 2 + c.v, c.s, c.r).u64();
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const TrainOutcome out =
              train_model(rec.variant, train_sets[at], val_sets[at],
                          test_sets[at], cfg, init_seed);
          rec.test_mse = out.test_mse;
          rec.val_mse = out.val_mse;
        } catch (const TrainingDiverged& e) {
          failures[i] = e.what();
        }
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        metrics.runs[i] = rec;
      },
      mode);
  for (const auto& f : failures)
    if (!f.empty()) throw TrainingDiverged(f);

  for (std::size_t v = 0; v < cfg.variants.size(); ++v)
    for (std::size_t s = 0; s < cfg.train_sizes.size(); ++s) {
      AggregateRecord agg;
      agg.variant = cfg.variants[v];
      agg.train_size = cfg.train_sizes[s];
      double sum = 0, sum2 = 0;
      for (std::size_t r = 0; r < static_cast<std::size_t>(cfg.reps); ++r) {
        const double x =
            metrics
                .runs[(v * cfg.train_sizes.size() + s) *
                          static_cast<std::size_t>(cfg.reps) +
                      r]
                .test_mse;
        sum += x;
        sum2 += x * x;
      }
      const double mean = sum / cfg.reps;
      agg.mse_mean = mean;
      agg.mse_std = std::sqrt(std::max(0.0, sum2 / cfg.reps - mean * mean));
      metrics.aggregate.push_back(agg);
    }
  return metrics;
}

std::string runs_csv(const Metrics& m) {
  std::string s = "variant,train_size,seed,test_mse,val_mse,wall_seconds\n";
  char buf[64];
  for (const auto& r : m.runs) {
    s += to_string(r.variant) + ',' + std::to_string(r.train_size) + ',' +
         std::to_string(r.rep) + ',' + fmt(r.test_mse) + ',' + fmt(r.val_mse);
    std::snprintf(buf, sizeof buf, ",%.3f\n", r.wall_seconds);
    s += buf;
  }
  return s;
}

std::string aggregate_csv(const Metrics& m) {
  std::string s = "variant,train_size,mse_mean,mse_std\n";
  for (const auto& a : m.aggregate)
    s += to_string(a.variant) + ',' + std::to_string(a.train_size) + ',' +
         fmt(a.mse_mean) + ',' + fmt(a.mse_std) + '\n';
  return s;
}

}  // namespace so3tengen::learn
