// Constitutive-law learning experiment: synthetic hyperelastic data, an
// equivariant model (scalar coefficient network times equivariant matrix
// features) against a plain MLP baseline, Adam with cosine annealing, and
// the metrics tables for the sample-efficiency comparison.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "so3tengen/parallel.hpp"
#include "so3tengen/rng.hpp"
#include "so3tengen/tensor.hpp"

namespace so3tengen::learn {

// P = mu (F + F^T - 2 I) + lambda (Tr F - 3) I.
Tensor linear_law(const Tensor& F, double mu, double lambda);

// P = mu (F F^T - I) + lambda log(det F) I. Throws NonPhysicalDeformation
// when det F <= 0.
Tensor neo_hookean(const Tensor& F, double mu, double lambda);

// F = I + amplitude * N with N entries uniform in [-1, 1], resampled until
// det F > 0.1. Requires 0 < amplitude < 1.
Tensor sample_deformation(Rng& rng, double amplitude);

// The five invariant inputs, in order:
// Tr F, Tr F F^T, Tr F^2, Tr F^3, Tr F^2 F^T.
std::vector<double> feature_invariants(const Tensor& F);

// The seven equivariant matrix features, in order:
// I, F, F^T, F F, F F^T, F^T F, F^T F^T.
std::vector<Tensor> equivariant_features(const Tensor& F);

struct DeformationSample {
  Tensor F;
  Tensor P;
};

// n samples with P = neo_hookean(F) exactly, no label noise.
std::vector<DeformationSample> make_dataset(int n, Rng& rng, double amplitude,
                                            double mu, double lambda);

// One JSON object {"F": [9 reals], "P": [9 reals]} per line, row-major.
void dump_jsonl(const std::vector<DeformationSample>& samples,
                std::ostream& os);

enum class Activation { Tanh, Identity };

// Affine-activation stack; the activation applies to hidden layers, the
// final layer stays linear.
struct MLPParams {
  std::vector<Tensor> w;  // one [out, in] matrix per layer
  std::vector<Tensor> b;  // one [out] vector per layer
  Activation act = Activation::Tanh;
};

// dims = {in, hidden..., out}; uniform entries scaled by
// sqrt(6 / (fan_in + fan_out)), biases zero.
MLPParams mlp_init(const std::vector<int>& dims, Rng& rng,
                   Activation act = Activation::Tanh);
MLPParams zeros_like(const MLPParams& p);

std::vector<double> mlp_apply(const MLPParams& p,
                              const std::vector<double>& x);

// Reverse accumulation; returns parameter gradients shaped like p for the
// scalar function <upstream, mlp_apply(p, x)>.
MLPParams mlp_gradients(const MLPParams& p, const std::vector<double>& x,
                        const std::vector<double>& upstream);

enum class Variant { Mlp, Equi3, Equi7 };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Input/output layer widths of the variant's network.
int variant_inputs(Variant v);
int variant_outputs(Variant v);

// mlp: flatten F into 9 inputs, reshape 9 outputs. equiK: coefficient
// network on the invariants times the first K equivariant features.
Tensor model_forward(Variant v, const MLPParams& p, const Tensor& F);

// Mean squared error over the 9 entries, averaged over the batch.
double batch_mse(Variant v, const MLPParams& p,
                 const std::vector<DeformationSample>& data);
// Same value; adds d(mse)/d(params) into grads (must be zeros_like(p)).
double batch_mse_and_gradients(Variant v, const MLPParams& p,
                               const std::vector<DeformationSample>& data,
                               MLPParams& grads);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-8;  // added to the gradient, not decoupled
  long long step = 0;
  MLPParams m;  // shaped like the parameters, zero at start
  MLPParams v;
};

// One bias-corrected update at learning rate lr; increments state.step.
void adam_step(MLPParams& params, const MLPParams& grads, AdamState& state,
               double lr);

// base_lr * (1 + cos(pi step / total_steps)) / 2.
double cosine_lr(int step, int total_steps, double base_lr);

struct TrainConfig {
  std::vector<int> train_sizes{100, 1000, 5000};
  int val_size = 200;
  int test_size = 1000;
  int reps = 3;  // runs per (variant, size) cell
  std::uint64_t seed = 0;
  int steps_small = 16000;  // optimizer steps for train sizes <= size_pivot
  int steps_large = 16000;
  int size_pivot = 1000;
  int batch_size = 15;  // 0 = full batch, else contiguous wrap-around slices
  int eval_every = 100;
  double lr = 5e-4;
  double weight_decay = 1e-8;
  double mu = 1.0;
  double lambda = 1.0;
  double amplitude = 0.3;
  std::vector<Variant> variants{Variant::Mlp, Variant::Equi3, Variant::Equi7};
};

struct TrainOutcome {
  double test_mse = 0;  // test MSE at the best-validation checkpoint
  double val_mse = 0;   // best validation MSE seen
  int steps = 0;
  std::vector<double> val_curve;  // one entry per evaluation point
};

// Deterministic single-threaded training of one run. Evaluates every
// eval_every steps and at the last step; optionally snapshots the parameters
// at each evaluation. Throws TrainingDiverged on a non-finite loss.
TrainOutcome train_model(Variant v,
                         const std::vector<DeformationSample>& train,
                         const std::vector<DeformationSample>& val,
                         const std::vector<DeformationSample>& test,
                         const TrainConfig& cfg, std::uint64_t init_seed,
                         std::vector<MLPParams>* checkpoints = nullptr);

struct RunRecord {
  Variant variant = Variant::Mlp;
  int train_size = 0;
  int rep = 0;
  double test_mse = 0;
  double val_mse = 0;
  double wall_seconds = 0;
};

struct AggregateRecord {
  Variant variant = Variant::Mlp;
  int train_size = 0;
  double mse_mean = 0;
  double mse_std = 0;  // population deviation over the reps
};

struct Metrics {
  std::vector<RunRecord> runs;
  std::vector<AggregateRecord> aggregate;
};

// Full grid: variants x train sizes x reps. Datasets depend on (seed, size,
// rep) only, so variants compare on identical data; network initialization
// additionally keys on the variant. Cells are independent jobs and may run
// in parallel; results are identical either way.
Metrics run_experiment(const TrainConfig& cfg, Exec mode = Exec::Parallel);

// CSV tables. Header variant,train_size,seed,test_mse,val_mse,wall_seconds
// and variant,train_size,mse_mean,mse_std; the aggregate table is
// byte-deterministic for a fixed config.
std::string runs_csv(const Metrics& m);
std::string aggregate_csv(const Metrics& m);

}  // namespace so3tengen::learn
