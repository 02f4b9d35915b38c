#include "so3tengen/invgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "so3tengen/errors.hpp"

namespace so3tengen::inv {

namespace {

constexpr int kMaxRank = 4;
constexpr std::size_t kMaxMatchingsPerMultiset = 200000;
constexpr std::size_t kMaxIsoRelabelings = 40320;
constexpr std::uint64_t kDefaultProbeSeed = 0x53a7c0de;

int parse_nonneg_int(const std::string& s) {
  if (s.empty()) throw InvalidType("expected a number, got \"" + s + "\"");
  for (char c : s)
    if (c < '0' || c > '9')
      throw InvalidType("expected a number, got \"" + s + "\"");
  if (s.size() > 2) throw InvalidType("number out of range: " + s);
  return std::atoi(s.c_str());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void check_slot_caps(const Slot& slot) {
  switch (slot.kind) {
    case SlotKind::Cartesian:
      if (slot.rank < 0 || slot.rank > kMaxRank)
        throw InvalidType("Cartesian rank out of range: " +
                          std::to_string(slot.rank));
      break;
    case SlotKind::Spherical:
      if (slot.type < 0 || slot.type > kMaxRank)
        throw InvalidType("spherical type out of range: " +
                          std::to_string(slot.type));
      break;
    case SlotKind::Sum:
      if (slot.types.empty()) throw InvalidType("empty direct sum");
      for (int t : slot.types)
        if (t < 0 || t > kMaxRank)
          throw InvalidType("sum type out of range: " + std::to_string(t));
      break;
  }
}

}  // namespace

Slot Slot::cart(int rank) {
  Slot s;
  s.kind = SlotKind::Cartesian;
  s.rank = rank;
  check_slot_caps(s);
  return s;
}

Slot Slot::sph(int type) {
  Slot s;
  s.kind = SlotKind::Spherical;
  s.type = type;
  check_slot_caps(s);
  return s;
}

Slot Slot::sum(std::vector<int> types) {
  Slot s;
  s.kind = SlotKind::Sum;
  s.types = std::move(types);
  check_slot_caps(s);
  return s;
}

std::vector<int> Slot::bound_shape() const {
  switch (kind) {
    case SlotKind::Cartesian:
      return std::vector<int>(rank, 3);
    case SlotKind::Spherical:
      return {2 * type + 1};
    case SlotKind::Sum: {
      int dim = 0;
      for (int t : types) dim += 2 * t + 1;
      return {dim};
    }
  }
  return {};
}

int Slot::cart_legs() const {
  switch (kind) {
    case SlotKind::Cartesian:
      return rank;
    case SlotKind::Spherical:
      return type;
    case SlotKind::Sum:
      return so3::sum_projector(types).wrap_rank;
  }
  return 0;
}

Signature Signature::parse(const std::string& text) {
  Signature sig;
  for (const std::string& token : split(text, ',')) {
    const auto colon = token.find(':');
    if (colon == std::string::npos)
      throw InvalidType("bad slot \"" + token + "\": expected kind:spec");
    const std::string head = token.substr(0, colon);
    const std::string tail = token.substr(colon + 1);
    if (head == "cart") {
      sig.slots.push_back(Slot::cart(parse_nonneg_int(tail)));
    } else if (head == "sph") {
      sig.slots.push_back(Slot::sph(parse_nonneg_int(tail)));
    } else if (head == "sum") {
      std::vector<int> types;
      for (const std::string& part : split(tail, '+'))
        types.push_back(parse_nonneg_int(part));
      sig.slots.push_back(Slot::sum(std::move(types)));
    } else {
      throw InvalidType("unknown slot kind \"" + head + "\"");
    }
  }
  return sig;
}

std::string Signature::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    if (j) out += ',';
    const Slot& s = slots[j];
    switch (s.kind) {
      case SlotKind::Cartesian:
        out += "cart:" + std::to_string(s.rank);
        break;
      case SlotKind::Spherical:
        out += "sph:" + std::to_string(s.type);
        break;
      case SlotKind::Sum:
        out += "sum:";
        for (std::size_t i = 0; i < s.types.size(); ++i) {
          if (i) out += '+';
          out += std::to_string(s.types[i]);
        }
        break;
    }
  }
  return out;
}

namespace {

// Legs within one merged class of a node are interchangeable without
// changing the generator's span: delta and epsilon legs by (anti)symmetry,
// the 3-extent legs of a single-type projector because its image is the
// symmetric subspace. Distinguishable legs get unique non-negative classes.
int leg_class(const Node& nd, int leg) {
  switch (nd.kind) {
    case NodeKind::Input:
      return leg;
    case NodeKind::Delta:
    case NodeKind::Epsilon:
      return -1;
    case NodeKind::Projector:
      if (nd.types.size() == 1) return leg == 0 ? 0 : -1;
      return leg;
  }
  return leg;
}

std::string node_color_seed(const Node& nd) {
  switch (nd.kind) {
    case NodeKind::Input:
      return "I" + std::to_string(nd.slot);
    case NodeKind::Delta:
      return "D";
    case NodeKind::Epsilon:
      return "E";
    case NodeKind::Projector: {
      std::string s = "P";
      for (int t : nd.types) s += std::to_string(t) + "+";
      return s;
    }
  }
  return "?";
}

// Refined color ids, deterministic under node relabeling (ids are ranks of
// sorted signature strings, never first-appearance order).
std::vector<int> refine_colors(const TensorNetwork& net) {
  const std::size_t n = net.nodes.size();
  std::vector<std::string> sig(n);
  for (std::size_t v = 0; v < n; ++v) sig[v] = node_color_seed(net.nodes[v]);

  auto compress = [&] {
    std::vector<std::string> uniq = sig;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<int> color(n);
    for (std::size_t v = 0; v < n; ++v)
      color[v] = static_cast<int>(
          std::lower_bound(uniq.begin(), uniq.end(), sig[v]) - uniq.begin());
    return color;
  };

  std::vector<int> color = compress();
  for (std::size_t round = 0; round < n; ++round) {
    std::vector<std::vector<std::string>> nbr(n);
    for (const Edge& e : net.edges) {
      for (int side = 0; side < 2; ++side) {
        const Endpoint& a = e[side];
        const Endpoint& b = e[1 - side];
        nbr[a.node].push_back(
            std::to_string(leg_class(net.nodes[a.node], a.leg)) + ":" +
            std::to_string(color[b.node]) + ":" +
            std::to_string(leg_class(net.nodes[b.node], b.leg)));
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      std::sort(nbr[v].begin(), nbr[v].end());
      std::string s = std::to_string(color[v]);
      for (const std::string& t : nbr[v]) s += "|" + t;
      sig[v] = std::move(s);
    }
    const std::vector<int> next = compress();
    if (next == color) break;
    color = next;
  }
  return color;
}

// Edge multiset with nodes relabeled by sigma and merged-class legs
// collapsed; equality of these multisets is exact isomorphism (each leg is
// used once, so per-bucket counts determine a leg assignment).
std::vector<std::string> normalized_edges(const TensorNetwork& net,
                                          const std::vector<int>& sigma) {
  auto endpoint_token = [&](const Endpoint& ep) {
    const int cls = leg_class(net.nodes[ep.node], ep.leg);
    if (cls < 0) return std::to_string(sigma[ep.node]) + ".c";
    return std::to_string(sigma[ep.node]) + ".l" + std::to_string(ep.leg);
  };
  std::vector<std::string> out;
  for (const Edge& e : net.edges) {
    std::string a = endpoint_token(e[0]);
    std::string b = endpoint_token(e[1]);
    if (b < a) std::swap(a, b);
    out.push_back(a + "-" + b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string canonical_key(const GeneratorNetwork& g) {
  const std::vector<int> color = refine_colors(g.net);

  std::vector<std::string> node_part;
  for (std::size_t v = 0; v < g.net.nodes.size(); ++v)
    node_part.push_back(node_color_seed(g.net.nodes[v]) + "#" +
                        std::to_string(color[v]));
  std::sort(node_part.begin(), node_part.end());

  auto endpoint_token = [&](const Endpoint& ep) {
    const int cls = leg_class(g.net.nodes[ep.node], ep.leg);
    return std::to_string(color[ep.node]) + "." +
           (cls < 0 ? "c" : "l" + std::to_string(cls));
  };
  std::vector<std::string> edge_part;
  for (const Edge& e : g.net.edges) {
    std::string a = endpoint_token(e[0]);
    std::string b = endpoint_token(e[1]);
    if (b < a) std::swap(a, b);
    edge_part.push_back(a + "-" + b);
  }
  std::sort(edge_part.begin(), edge_part.end());

  std::string key;
  for (const std::string& s : node_part) key += s + ";";
  key += "/";
  for (const std::string& s : edge_part) key += s + ";";
  return key;
}

bool networks_isomorphic(const GeneratorNetwork& a,
                         const GeneratorNetwork& b) {
  const TensorNetwork& na = a.net;
  const TensorNetwork& nb = b.net;
  if (na.nodes.size() != nb.nodes.size() ||
      na.edges.size() != nb.edges.size())
    return false;

  // Interchangeability classes from the seed colors only; the permutation
  // search below subsumes any refinement.
  std::map<std::string, std::vector<int>> ca, cb;
  for (std::size_t v = 0; v < na.nodes.size(); ++v)
    ca[node_color_seed(na.nodes[v])].push_back(static_cast<int>(v));
  for (std::size_t v = 0; v < nb.nodes.size(); ++v)
    cb[node_color_seed(nb.nodes[v])].push_back(static_cast<int>(v));
  if (ca.size() != cb.size()) return false;
  std::size_t relabelings = 1;
  for (const auto& [key, members] : ca) {
    auto it = cb.find(key);
    if (it == cb.end() || it->second.size() != members.size()) return false;
    for (std::size_t k = 2; k <= members.size(); ++k) {
      relabelings *= k;
      if (relabelings > kMaxIsoRelabelings)
        throw EnumerationTooLarge("isomorphism search too large",
                                  relabelings);
    }
  }

  const std::vector<std::string> want = normalized_edges(nb, [&] {
    std::vector<int> id(nb.nodes.size());
    std::iota(id.begin(), id.end(), 0);
    return id;
  }());

  // Odometer over per-class permutations.
  std::vector<std::pair<std::vector<int>, std::vector<int>>> classes;
  for (const auto& [key, members] : ca)
    classes.emplace_back(members, cb.at(key));
  std::vector<std::vector<int>> perm(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    perm[c].resize(classes[c].first.size());
    std::iota(perm[c].begin(), perm[c].end(), 0);
  }
  std::vector<int> sigma(na.nodes.size());
  while (true) {
    for (std::size_t c = 0; c < classes.size(); ++c)
      for (std::size_t i = 0; i < perm[c].size(); ++i)
        sigma[classes[c].first[i]] = classes[c].second[perm[c][i]];
    if (normalized_edges(na, sigma) == want) return true;
    // Advance: next_permutation cascade over classes.
    std::size_t c = 0;
    while (c < classes.size() &&
           !std::next_permutation(perm[c].begin(), perm[c].end()))
      ++c;
    if (c == classes.size()) return false;
  }
}

namespace {

struct BaseLayout {
  std::vector<Node> nodes;
  std::vector<Edge> wrap_edges;
  std::vector<Endpoint> match_legs;  // all extent-3
};

BaseLayout build_base(const Signature& sig, const std::vector<int>& degree) {
  BaseLayout base;
  for (std::size_t j = 0; j < sig.slots.size(); ++j) {
    const Slot& slot = sig.slots[j];
    for (int c = 0; c < degree[j]; ++c) {
      const int in_idx = static_cast<int>(base.nodes.size());
      base.nodes.push_back(Node::input(static_cast<int>(j), c));
      if (slot.kind == SlotKind::Cartesian) {
        for (int leg = 0; leg < slot.rank; ++leg)
          base.match_legs.push_back({in_idx, leg});
      } else {
        const std::vector<int> types = slot.kind == SlotKind::Spherical
                                           ? std::vector<int>{slot.type}
                                           : slot.types;
        const int pr_idx = static_cast<int>(base.nodes.size());
        base.nodes.push_back(Node::projector(types));
        base.wrap_edges.push_back({Endpoint{in_idx, 0}, Endpoint{pr_idx, 0}});
        for (int leg = 1; leg <= slot.cart_legs(); ++leg)
          base.match_legs.push_back({pr_idx, leg});
      }
    }
  }
  return base;
}

bool is_connected(std::size_t n_nodes, const std::vector<Edge>& edges) {
  if (n_nodes == 0) return false;
  std::vector<int> parent(n_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : edges) {
    const int a = find(e[0].node), b = find(e[1].node);
    if (a != b) parent[a] = b;
  }
  const int root = find(0);
  for (std::size_t v = 1; v < n_nodes; ++v)
    if (find(static_cast<int>(v)) != root) return false;
  return true;
}

std::size_t double_factorial_odd(int m) {
  // (2m-1)!! matchings of 2m points; saturates instead of overflowing.
  std::size_t out = 1;
  for (int k = 2 * m - 1; k >= 3; k -= 2) {
    if (out > (std::size_t(1) << 60) / k) return std::size_t(1) << 62;
    out *= k;
  }
  return out;
}

}  // namespace

GeneratorSet enumerate_networks(const Signature& sig, int max_degree,
                                int epsilon_budget) {
  if (sig.slots.empty()) throw InvalidType("empty signature");
  for (const Slot& s : sig.slots) check_slot_caps(s);
  if (max_degree < 1)
    throw InvalidType("max_degree must be at least 1");
  if (epsilon_budget != 0 && epsilon_budget != 1)
    throw InvalidType("epsilon budget must be 0 or 1");

  struct Candidate {
    GeneratorNetwork g;
    std::string key;
    int total_degree;
  };
  std::vector<Candidate> kept;
  std::map<std::string, std::vector<std::size_t>> by_key;

  const std::size_t n_slots = sig.slots.size();
  std::vector<int> degree(n_slots, 0);

  // Odometer over copy multisets in lexicographic order, total in
  // [1, max_degree].
  while (true) {
    std::size_t j = 0;
    while (j < n_slots) {
      ++degree[j];
      if (std::accumulate(degree.begin(), degree.end(), 0) <= max_degree)
        break;
      degree[j] = 0;
      ++j;
    }
    if (j == n_slots) break;

    BaseLayout base = build_base(sig, degree);
    const bool odd = base.match_legs.size() % 2 == 1;
    if (odd && epsilon_budget == 0) continue;
    bool uses_epsilon = false;
    if (odd) {
      const int eps_idx = static_cast<int>(base.nodes.size());
      base.nodes.push_back(Node::epsilon_node());
      for (int leg = 0; leg < 3; ++leg)
        base.match_legs.push_back({eps_idx, leg});
      uses_epsilon = true;
    }

    const int m = static_cast<int>(base.match_legs.size()) / 2;
    const std::size_t estimate = double_factorial_odd(m);
    if (estimate > kMaxMatchingsPerMultiset)
      throw EnumerationTooLarge(
          "matching count for copy multiset exceeds the cap", estimate);

    auto consider = [&](const std::vector<Edge>& match_edges) {
      std::vector<Edge> edges = base.wrap_edges;
      edges.insert(edges.end(), match_edges.begin(), match_edges.end());
      if (!is_connected(base.nodes.size(), edges)) return;
      GeneratorNetwork g;
      g.net.nodes = base.nodes;
      g.net.edges = std::move(edges);
      g.degree = degree;
      g.uses_epsilon = uses_epsilon;
      validate(g.net);
      std::string key = canonical_key(g);
      for (std::size_t idx : by_key[key])
        if (networks_isomorphic(kept[idx].g, g)) return;
      by_key[key].push_back(kept.size());
      kept.push_back({std::move(g), std::move(key),
                      std::accumulate(degree.begin(), degree.end(), 0)});
    };

    // Recursive perfect matching: pair the first free leg with every later
    // free leg.
    std::vector<char> used(base.match_legs.size(), 0);
    std::vector<Edge> match_edges;
    auto recurse = [&](auto&& self) -> void {
      std::size_t first = 0;
      while (first < used.size() && used[first]) ++first;
      if (first == used.size()) {
        consider(match_edges);
        return;
      }
      used[first] = 1;
      for (std::size_t other = first + 1; other < used.size(); ++other) {
        if (used[other]) continue;
        used[other] = 1;
        match_edges.push_back(
            {base.match_legs[first], base.match_legs[other]});
        self(self);
        match_edges.pop_back();
        used[other] = 0;
      }
      used[first] = 0;
    };
    if (base.match_legs.empty())
      consider({});
    else
      recurse(recurse);
  }

  std::stable_sort(kept.begin(), kept.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.total_degree != b.total_degree)
                       return a.total_degree < b.total_degree;
                     return a.key < b.key;
                   });

  GeneratorSet out;
  out.signature = sig;
  out.max_degree = max_degree;
  out.seed = kDefaultProbeSeed;
  for (Candidate& c : kept) out.generators.push_back(std::move(c.g));
  return out;
}

Bindings random_bindings(const Signature& sig, Rng& rng) {
  Bindings bind;
  for (std::size_t j = 0; j < sig.slots.size(); ++j) {
    Tensor t(sig.slots[j].bound_shape());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    bind[static_cast<int>(j)] = std::move(t);
  }
  return bind;
}

double evaluate_generator(const GeneratorNetwork& g, const Bindings& bind) {
  return contract_network(g.net, bind, so3::projector_provider()).value();
}

GeneratorSet dedup_numeric(const GeneratorSet& in, int probe_count,
                           double tol, Exec mode) {
  const std::size_t n = in.generators.size();
  GeneratorSet out;
  out.signature = in.signature;
  out.max_degree = in.max_degree;
  out.seed = in.seed;
  if (n == 0) return out;
  if (probe_count < static_cast<int>(2 * n))
    throw Error("dedup_numeric needs at least 2 probes per generator");

  std::vector<Bindings> probes(probe_count);
  for (int k = 0; k < probe_count; ++k) {
    Rng rng = Rng::from_path(in.seed, static_cast<std::uint64_t>(k));
    probes[k] = random_bindings(in.signature, rng);
  }

  const std::size_t cols = static_cast<std::size_t>(probe_count);
  std::vector<double> values(n * cols);
  parallel_for(
      n * cols,
      [&](std::size_t idx) {
        values[idx] =
            evaluate_generator(in.generators[idx / cols], probes[idx % cols]);
      },
      mode);

  double top = 0;
  for (std::size_t g = 0; g < n; ++g) {
    double n2 = 0;
    for (std::size_t k = 0; k < cols; ++k)
      n2 += values[g * cols + k] * values[g * cols + k];
    top = std::max(top, std::sqrt(n2));
  }

  std::vector<std::vector<double>> basis;
  for (std::size_t g = 0; g < n; ++g) {
    std::vector<double> r(values.begin() + g * cols,
                          values.begin() + (g + 1) * cols);
    for (const auto& q : basis) {
      double d = 0;
      for (std::size_t k = 0; k < cols; ++k) d += q[k] * r[k];
      for (std::size_t k = 0; k < cols; ++k) r[k] -= d * q[k];
    }
    double n2 = 0;
    for (double x : r) n2 += x * x;
    const double norm = std::sqrt(n2);
    if (top > 0 && norm > tol * top) {
      for (double& x : r) x /= norm;
      basis.push_back(std::move(r));
      out.generators.push_back(in.generators[g]);
    }
  }
  return out;
}

Tensor wrap_spherical(const Tensor& x, int l) {
  if (l < 0) throw InvalidType("negative spherical type");
  if (x.shape() != std::vector<int>{2 * l + 1})
    throw ShapeMismatch("expected a vector of extent " +
                        std::to_string(2 * l + 1));
  return contract(x, so3::projector(l).p, {{0, 0}});
}

bool epsilon_pair_reduce_check() {
  auto eps = [](int i, int j, int k) -> int {
    return (i - j) * (j - k) * (k - i) / 2;  // sign of the permutation
  };
  // Verify the sign helper on a known value first.
  if (eps(0, 1, 2) != 1) return false;
  auto d = [](int a, int b) -> int { return a == b ? 1 : 0; };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) {
              const int lhs = eps(i, j, k) * eps(l, m, n);
              const int rhs =
                  d(i, l) * (d(j, m) * d(k, n) - d(j, n) * d(k, m)) -
                  d(i, m) * (d(j, l) * d(k, n) - d(j, n) * d(k, l)) +
                  d(i, n) * (d(j, l) * d(k, m) - d(j, m) * d(k, l));
              if (lhs != rhs) return false;
            }
  return true;
}

Tensor apply_slot_rotation(const Slot& slot, const so3::Rotation& R,
                           const Tensor& value) {
  if (value.shape() != slot.bound_shape())
    throw ShapeMismatch("bound tensor does not match the slot");
  switch (slot.kind) {
    case SlotKind::Cartesian:
      if (slot.rank == 0) return value;
      return rotate_cartesian(R, value);
    case SlotKind::Spherical:
      return contract(irrep_matrix(slot.type, R), value, {{1, 0}});
    case SlotKind::Sum: {
      Tensor out(value.shape());
      int off = 0;
      for (int t : slot.types) {
        const int w = 2 * t + 1;
        const Tensor D = irrep_matrix(t, R);
        for (int i = 0; i < w; ++i) {
          double acc = 0;
          for (int j = 0; j < w; ++j)
            acc += D.at({i, j}) * value[off + j];
          out[off + i] = acc;
        }
        off += w;
      }
      return out;
    }
  }
  return value;
}

Json generator_set_to_json(const GeneratorSet& set) {
  Json j;
  j["signature"] = set.signature.to_string();
  j["max_degree"] = set.max_degree;
  j["seed"] = set.seed;
  Json gens = Json::array();
  for (const GeneratorNetwork& g : set.generators) {
    Json e;
    e["net"] = network_to_json(g.net);
    e["degree"] = g.degree;
    e["uses_epsilon"] = g.uses_epsilon;
    gens.push_back(std::move(e));
  }
  j["generators"] = std::move(gens);
  return j;
}

GeneratorSet generator_set_from_json(const Json& j) {
  GeneratorSet set;
  set.signature = Signature::parse(j.at("signature").get<std::string>());
  set.max_degree = j.at("max_degree").get<int>();
  set.seed = j.at("seed").get<std::uint64_t>();
  for (const Json& e : j.at("generators")) {
    GeneratorNetwork g;
    g.net = network_from_json(e.at("net"));
    g.degree = e.at("degree").get<std::vector<int>>();
    g.uses_epsilon = e.at("uses_epsilon").get<bool>();
    if (g.degree.size() != set.signature.slots.size())
      throw InvalidType("degree vector does not match the signature");
    set.generators.push_back(std::move(g));
  }
  return set;
}

}  // namespace so3tengen::inv
