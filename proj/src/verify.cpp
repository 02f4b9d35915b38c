#include "so3tengen/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "so3tengen/errors.hpp"
#include "so3tengen/rng.hpp"
#include "so3tengen/so3rep.hpp"
#include "so3tengen/tensor.hpp"

namespace so3tengen::vfy {
namespace {

struct Probe {
  Bindings bound;
  Bindings rotated;
  so3::Rotation R;
};

// One fresh binding and rotation per sample, all derived from the seed so
// the sweep is reproducible independently of the execution mode.
std::vector<Probe> make_probes(const inv::Signature& sig, int rotations,
                               std::uint64_t seed) {
  if (rotations <= 0) throw Error("rotation sample count must be positive");
  std::vector<Probe> probes(static_cast<std::size_t>(rotations));
  for (int k = 0; k < rotations; ++k) {
    Rng rng = Rng::from_path(seed, static_cast<std::uint64_t>(k));
    Probe& p = probes[static_cast<std::size_t>(k)];
    p.bound = inv::random_bindings(sig, rng);
    p.R = so3::random_rotation(rng);
    for (std::size_t s = 0; s < sig.slots.size(); ++s) {
      const int slot = static_cast<int>(s);
      p.rotated[slot] =
          inv::apply_slot_rotation(sig.slots[s], p.R, p.bound.at(slot));
    }
  }
  return probes;
}

double frobenius(const Tensor& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
  return std::sqrt(s);
}

bool all_within(const std::vector<double>& violations, double tol) {
  return std::all_of(violations.begin(), violations.end(),
                     [tol](double v) { return v <= tol; });
}

}  // namespace

VerificationReport check_invariance(const inv::GeneratorSet& set,
                                    int rotations, double tol,
                                    std::uint64_t seed, Exec mode) {
  const std::vector<Probe> probes =
      make_probes(set.signature, rotations, seed);
  VerificationReport rep;
  rep.signature = set.signature.to_string();
  rep.max_degree = set.max_degree;
  rep.rotations = rotations;
  rep.seed = seed;
  rep.tol = tol;
  rep.invariance.assign(set.generators.size(), 0.0);
  parallel_for(
      set.generators.size(),
      [&](std::size_t g) {
        double worst = 0.0;
        for (const Probe& p : probes) {
          const double base = inv::evaluate_generator(set.generators[g], p.bound);
          const double turned =
              inv::evaluate_generator(set.generators[g], p.rotated);
          worst = std::max(worst,
                           std::abs(turned - base) / (1.0 + std::abs(base)));
        }
        rep.invariance[g] = worst;
      },
      mode);
  rep.pass = all_within(rep.invariance, tol);
  return rep;
}

VerificationReport check_equivariance(const eqv::EquivariantBasis& basis,
                                      int rotations, double tol,
                                      std::uint64_t seed, Exec mode) {
  const std::vector<Probe> probes =
      make_probes(basis.input_signature, rotations, seed);
  VerificationReport rep;
  rep.signature = basis.input_signature.to_string();
  rep.out_rep = inv::Signature{{basis.output}}.to_string();
  rep.max_degree = basis.max_degree;
  rep.rotations = rotations;
  rep.seed = seed;
  rep.tol = tol;
  rep.equivariance.assign(basis.elements.size(), 0.0);
  parallel_for(
      basis.elements.size(),
      [&](std::size_t e) {
        double worst = 0.0;
        for (const Probe& p : probes) {
          const Tensor base =
              eqv::evaluate_basis_element(basis.elements[e], p.bound);
          const Tensor turned =
              eqv::evaluate_basis_element(basis.elements[e], p.rotated);
          const Tensor expect =
              inv::apply_slot_rotation(basis.output, p.R, base);
          double diff2 = 0.0;
          for (std::size_t i = 0; i < expect.size(); ++i) {
            const double d = turned[i] - expect[i];
            diff2 += d * d;
          }
          worst = std::max(worst,
                           std::sqrt(diff2) / (1.0 + frobenius(base)));
        }
        rep.equivariance[e] = worst;
      },
      mode);
  rep.pass = all_within(rep.equivariance, tol);
  return rep;
}

Json report_to_json(const VerificationReport& r) {
  Json j;
  j["signature"] = r.signature;
  j["out_rep"] = r.out_rep;
  j["max_degree"] = r.max_degree;
  j["invariance"] = r.invariance;
  j["equivariance"] = r.equivariance;
  j["rotations"] = r.rotations;
  j["seed"] = r.seed;
  j["tol"] = r.tol;
  j["pass"] = r.pass;
  return j;
}

VerificationReport report_from_json(const Json& j) {
  VerificationReport r;
  r.signature = j.at("signature").get<std::string>();
  r.out_rep = j.at("out_rep").get<std::string>();
  r.max_degree = j.at("max_degree").get<int>();
  r.invariance = j.at("invariance").get<std::vector<double>>();
  r.equivariance = j.at("equivariance").get<std::vector<double>>();
  r.rotations = j.at("rotations").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.tol = j.at("tol").get<double>();
  r.pass = j.at("pass").get<bool>();
  return r;
}

}  // namespace so3tengen::vfy
