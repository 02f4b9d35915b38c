#include "so3tengen/equivar.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "so3tengen/errors.hpp"
#include "so3tengen/parallel.hpp"
#include "so3tengen/rng.hpp"
#include "so3tengen/so3rep.hpp"

namespace so3tengen::eqv {

namespace {

constexpr std::uint64_t kBasisProbeSeed = 0x0e9f1ba5;

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

}  // namespace

EquivariantBasis equivariant_basis(const inv::Signature& sig_in,
                                   const inv::Slot& out_rep, int max_degree,
                                   double tol) {
  inv::Signature ext = sig_in;
  ext.slots.push_back(out_rep);
  const int out_slot = static_cast<int>(sig_in.slots.size());
  const inv::GeneratorSet gens = inv::enumerate_networks(ext, max_degree + 1, 1);

  EquivariantBasis basis;
  basis.input_signature = sig_in;
  basis.output = out_rep;
  basis.max_degree = max_degree;
  basis.seed = kBasisProbeSeed;

  std::vector<EquivariantNetwork> cands;
  for (const auto& g : gens.generators) {
    if (g.degree[static_cast<std::size_t>(out_slot)] != 1) continue;
    int node = -1;
    for (std::size_t i = 0; i < g.net.nodes.size(); ++i) {
      const Node& nd = g.net.nodes[i];
      if (nd.kind == NodeKind::Input && nd.slot == out_slot) {
        node = static_cast<int>(i);
        break;
      }
    }
    EquivariantNetwork e;
    e.net = remove_node(g.net, node);
    e.source = g;
    e.output_slot = out_slot;
    cands.push_back(std::move(e));
  }
  if (cands.empty()) return basis;

  // Map-level dedup: flatten each candidate's outputs over shared probes and
  // keep a maximal independent row set, first listed wins.
  const std::size_t out_size = shape_size(out_rep.bound_shape());
  const std::size_t n_probes = std::max<std::size_t>(8, 2 * cands.size());
  std::vector<Bindings> probes;
  probes.reserve(n_probes);
  for (std::size_t k = 0; k < n_probes; ++k) {
    Rng rng = Rng::from_path(basis.seed, static_cast<std::uint64_t>(k));
    probes.push_back(inv::random_bindings(sig_in, rng));
  }

  const std::size_t row_len = n_probes * out_size;
  std::vector<double> rows(cands.size() * row_len);
  parallel_for(cands.size() * n_probes, [&](std::size_t idx) {
    const std::size_t i = idx / n_probes;
    const std::size_t k = idx % n_probes;
    const Tensor v = contract_network(cands[i].net, probes[k],
                                      so3::projector_provider());
    for (std::size_t j = 0; j < out_size; ++j)
      rows[i * row_len + k * out_size + j] = v[j];
  });

  double top = 0;
  std::vector<double> norms(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    double n2 = 0;
    for (std::size_t j = 0; j < row_len; ++j) {
      const double x = rows[i * row_len + j];
      n2 += x * x;
    }
    norms[i] = std::sqrt(n2);
    top = std::max(top, norms[i]);
  }

  std::vector<std::vector<double>> ortho;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    std::vector<double> r(rows.begin() + static_cast<std::ptrdiff_t>(i * row_len),
                          rows.begin() + static_cast<std::ptrdiff_t>((i + 1) * row_len));
    for (const auto& q : ortho) {
      double d = 0;
      for (std::size_t j = 0; j < row_len; ++j) d += q[j] * r[j];
      for (std::size_t j = 0; j < row_len; ++j) r[j] -= d * q[j];
    }
    double n2 = 0;
    for (double x : r) n2 += x * x;
    const double n = std::sqrt(n2);
    if (n <= tol * top) continue;
    for (double& x : r) x /= n;
    ortho.push_back(std::move(r));
    basis.elements.push_back(cands[i]);
  }
  return basis;
}

Tensor evaluate_basis_element(const EquivariantNetwork& e,
                              const Bindings& bind) {
  return contract_network(e.net, bind, so3::projector_provider());
}

Tensor combine(const std::vector<Tensor>& values,
               const std::vector<double>& coeffs) {
  if (values.empty() || values.size() != coeffs.size())
    throw ShapeMismatch("combine: need one coefficient per value");
  Tensor out(values[0].shape());
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j].shape() != out.shape())
      throw ShapeMismatch("combine: values have uneven shapes");
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] += coeffs[j] * values[j][i];
  }
  return out;
}

double pair_down(const Tensor& value, const Tensor& y) {
  if (value.shape() != y.shape())
    throw ShapeMismatch("pair_down: shapes differ");
  return dot(value, y);
}

TpResult tp_couple(const Tensor& a, int la, const Tensor& b, int lb, int lc) {
  const so3::CGTensor& C = so3::cg(la, lb, lc);
  if (a.rank() != 1 || a.shape()[0] != 2 * la + 1)
    throw ShapeMismatch("tp_couple: first factor has the wrong extent");
  if (b.rank() != 1 || b.shape()[0] != 2 * lb + 1)
    throw ShapeMismatch("tp_couple: second factor has the wrong extent");
  TpResult r;
  r.coupled = C.nonzero;
  r.value = contract(contract(a, C.c, {{0, 0}}), b, {{0, 0}});
  return r;
}

double tp_network_equals_cg(int la, int lb, int lc) {
  if (la < 0 || lb < 0 || lc < 0)
    throw InvalidType("tp_network_equals_cg: negative type");
  if (lc < std::abs(la - lb) || lc > la + lb)
    throw InvalidType("tp_network_equals_cg: triangle rule fails");

  const Tensor& pa = so3::projector(la).p;
  const Tensor& pb = so3::projector(lb).p;
  const Tensor& pc = so3::projector(lc).p;
  const bool odd = (la + lb + lc) % 2 != 0;

  // Split each projector's Cartesian legs between the two neighbours; in the
  // odd case one leg per projector is held back for a central epsilon node.
  // The legs are interchangeable, so any assignment within a share works.
  const int ab = (la + lb - lc - (odd ? 1 : 0)) / 2;
  const int bc = (lb + lc - la - (odd ? 1 : 0)) / 2;
  const int ca = (lc + la - lb - (odd ? 1 : 0)) / 2;

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < ab; ++i) pairs.push_back({1 + i, 1 + i});
  const Tensor t1 = contract(pa, pb, pairs);
  // Axes: alpha, ca legs, [eps_a], beta, bc legs, [eps_b].
  const int beta_pos = 1 + ca + (odd ? 1 : 0);
  pairs.clear();
  for (int i = 0; i < ca; ++i) pairs.push_back({1 + i, 1 + i});
  for (int j = 0; j < bc; ++j) pairs.push_back({beta_pos + 1 + j, 1 + ca + j});
  const Tensor t2 = contract(t1, pc, pairs);

  Tensor built;
  if (odd) {
    // Axes of t2: alpha, eps_a, beta, eps_b, gamma, eps_c.
    built = contract(t2, epsilon(), {{1, 0}, {3, 1}, {5, 2}});
  } else {
    built = t2;
  }

  const so3::CGTensor& C = so3::cg(la, lb, lc);
  const double denom = dot(C.c, C.c);
  const double kappa = dot(built, C.c) / denom;
  const double built_norm = frobenius_norm(built);
  double diff2 = 0;
  for (std::size_t i = 0; i < built.size(); ++i) {
    const double d = built[i] - kappa * C.c[i];
    diff2 += d * d;
  }
  if (built_norm == 0.0 || std::abs(kappa) < 1e-12 ||
      std::sqrt(diff2) > 1e-9 * built_norm)
    throw ProportionalityFailure("triangle network is not proportional to the coupling tensor");
  return kappa;
}

std::string network_sketch(const TensorNetwork& net) {
  std::string s;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Node& nd = net.nodes[i];
    if (i > 0) s += ' ';
    s += 'n' + std::to_string(i) + ':';
    switch (nd.kind) {
      case NodeKind::Input:
        s += "input" + std::to_string(nd.slot) + '.' + std::to_string(nd.copy);
        break;
      case NodeKind::Delta:
        s += "delta";
        break;
      case NodeKind::Epsilon:
        s += "epsilon";
        break;
      case NodeKind::Projector:
        s += "proj(";
        for (std::size_t t = 0; t < nd.types.size(); ++t) {
          if (t > 0) s += '+';
          s += std::to_string(nd.types[t]);
        }
        s += ')';
        break;
    }
  }
  s += " |";
  for (const Edge& e : net.edges)
    s += " n" + std::to_string(e[0].node) + '.' + std::to_string(e[0].leg) +
         "-n" + std::to_string(e[1].node) + '.' + std::to_string(e[1].leg);
  s += " |";
  for (const Endpoint& ep : net.open)
    s += " n" + std::to_string(ep.node) + '.' + std::to_string(ep.leg);
  return s;
}

Json basis_to_json(const EquivariantBasis& basis) {
  Json j;
  j["signature"] = basis.input_signature.to_string();
  j["out_rep"] = inv::Signature{{basis.output}}.to_string();
  j["max_degree"] = basis.max_degree;
  j["seed"] = basis.seed;
  Json els = Json::array();
  for (const auto& e : basis.elements) {
    Json je;
    je["net"] = network_to_json(e.net);
    Json src;
    src["net"] = network_to_json(e.source.net);
    src["degree"] = e.source.degree;
    src["uses_epsilon"] = e.source.uses_epsilon;
    je["source"] = std::move(src);
    je["output_slot"] = e.output_slot;
    els.push_back(std::move(je));
  }
  j["elements"] = std::move(els);
  return j;
}

EquivariantBasis basis_from_json(const Json& j) {
  EquivariantBasis basis;
  basis.input_signature =
      inv::Signature::parse(j.at("signature").get<std::string>());
  const inv::Signature out =
      inv::Signature::parse(j.at("out_rep").get<std::string>());
  if (out.slots.size() != 1)
    throw Error("basis_from_json: out_rep must be a single slot");
  basis.output = out.slots[0];
  basis.max_degree = j.at("max_degree").get<int>();
  basis.seed = j.at("seed").get<std::uint64_t>();
  for (const Json& je : j.at("elements")) {
    EquivariantNetwork e;
    e.net = network_from_json(je.at("net"));
    const Json& src = je.at("source");
    e.source.net = network_from_json(src.at("net"));
    e.source.degree = src.at("degree").get<std::vector<int>>();
    e.source.uses_epsilon = src.at("uses_epsilon").get<bool>();
    e.output_slot = je.at("output_slot").get<int>();
    if (e.source.degree.size() != basis.input_signature.slots.size() + 1)
      throw Error("basis_from_json: degree length does not match");
    basis.elements.push_back(std::move(e));
  }
  return basis;
}

}  // namespace so3tengen::eqv
