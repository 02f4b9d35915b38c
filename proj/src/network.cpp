#include "so3tengen/network.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "so3tengen/rng.hpp"

namespace so3tengen {

namespace {

std::string ep_str(const Endpoint& e) {
  return "(" + std::to_string(e.node) + "," + std::to_string(e.leg) + ")";
}

}  // namespace

int node_arity(const TensorNetwork& net, int node) {
  int max_leg = -1;
  for (const auto& e : net.edges)
    for (const auto& ep : e)
      if (ep.node == node) max_leg = std::max(max_leg, ep.leg);
  for (const auto& ep : net.open)
    if (ep.node == node) max_leg = std::max(max_leg, ep.leg);
  return max_leg + 1;
}

void validate(const TensorNetwork& net) {
  const int n = static_cast<int>(net.nodes.size());
  std::vector<std::vector<int>> uses(n);
  auto touch = [&](const Endpoint& ep) {
    if (ep.node < 0 || ep.node >= n)
      throw InvalidNode("endpoint references node " + std::to_string(ep.node) +
                        " of " + std::to_string(n));
    if (ep.leg < 0) throw InvalidNode("negative leg at " + ep_str(ep));
    auto& u = uses[ep.node];
    if (ep.leg >= static_cast<int>(u.size())) u.resize(ep.leg + 1, 0);
    if (++u[ep.leg] > 1)
      throw InvalidNode("leg used twice at " + ep_str(ep));
  };
  for (const auto& e : net.edges) {
    if (e[0] == e[1]) throw InvalidNode("edge joins a leg to itself");
    touch(e[0]);
    touch(e[1]);
  }
  for (const auto& ep : net.open) touch(ep);

  for (int k = 0; k < n; ++k) {
    const auto& u = uses[k];
    for (std::size_t leg = 0; leg < u.size(); ++leg)
      if (u[leg] == 0)
        throw InvalidNode("node " + std::to_string(k) + " leg " +
                          std::to_string(leg) + " unused below its max leg");
    const int arity = static_cast<int>(u.size());
    const Node& nd = net.nodes[k];
    switch (nd.kind) {
      case NodeKind::Delta:
        if (arity != 2) throw InvalidNode("delta node needs arity 2");
        break;
      case NodeKind::Epsilon:
        if (arity != 3) throw InvalidNode("epsilon node needs arity 3");
        break;
      case NodeKind::Projector:
        if (nd.types.empty())
          throw InvalidNode("projector node without types");
        for (int t : nd.types)
          if (t < 0) throw InvalidNode("projector with negative type");
        if (nd.types.size() == 1 && arity != nd.types[0] + 1)
          throw InvalidNode("projector of type " +
                            std::to_string(nd.types[0]) + " needs arity " +
                            std::to_string(nd.types[0] + 1));
        break;
      case NodeKind::Input:
        // Arity 0 is allowed: a scalar slot binds a rank-0 tensor.
        if (nd.slot < 0 || nd.copy < 0)
          throw InvalidNode("input node needs slot and copy indices");
        break;
    }
  }
}

namespace {

struct Part {
  Tensor t;
  std::vector<Endpoint> axes;  // original (node, leg) of each tensor axis
  int min_node;

  int find_axis(const Endpoint& ep) const {
    for (std::size_t i = 0; i < axes.size(); ++i)
      if (axes[i] == ep) return static_cast<int>(i);
    return -1;
  }

  int axis_of(const Endpoint& ep) const {
    const int i = find_axis(ep);
    if (i < 0) throw InvalidNode("internal: endpoint lost during contraction");
    return i;
  }
};

// Contract all listed edges between two parts; axes = a-free then b-free.
Part merge_parts(const Part& a, const Part& b,
                 const std::vector<Edge>& between) {
  std::vector<std::pair<int, int>> pairs;
  std::vector<char> used_a(a.axes.size(), 0), used_b(b.axes.size(), 0);
  for (const auto& e : between) {
    // Orient each edge as (in a, in b).
    int ia = a.find_axis(e[0]);
    const int ib = ia >= 0 ? b.axis_of(e[1]) : b.axis_of(e[0]);
    if (ia < 0) ia = a.axis_of(e[1]);
    pairs.emplace_back(ia, ib);
    used_a[ia] = 1;
    used_b[ib] = 1;
  }
  Part out;
  out.t = contract(a.t, b.t, pairs);
  for (std::size_t i = 0; i < a.axes.size(); ++i)
    if (!used_a[i]) out.axes.push_back(a.axes[i]);
  for (std::size_t i = 0; i < b.axes.size(); ++i)
    if (!used_b[i]) out.axes.push_back(b.axes[i]);
  out.min_node = std::min(a.min_node, b.min_node);
  return out;
}

// Trace out edges internal to one part.
void absorb_internal(Part& p, const std::vector<Edge>& internal) {
  if (internal.empty()) return;
  std::vector<std::pair<int, int>> pairs;
  std::vector<char> used(p.axes.size(), 0);
  for (const auto& e : internal) {
    const int x = p.axis_of(e[0]);
    const int y = p.axis_of(e[1]);
    pairs.emplace_back(x, y);
    used[x] = used[y] = 1;
  }
  p.t = trace_pairs(p.t, pairs);
  std::vector<Endpoint> kept;
  for (std::size_t i = 0; i < p.axes.size(); ++i)
    if (!used[i]) kept.push_back(p.axes[i]);
  p.axes = std::move(kept);
}

}  // namespace

Tensor contract_network(const TensorNetwork& net, const Bindings& bindings,
                        const ProjectorProvider& projectors,
                        const ContractionOptions& opts) {
  validate(net);
  const int n = static_cast<int>(net.nodes.size());
  if (n == 0) {
    if (!net.open.empty()) throw InvalidNode("open legs without nodes");
    return Tensor::scalar(1.0);  // empty contraction
  }

  std::vector<Part> parts;
  parts.reserve(n);
  for (int k = 0; k < n; ++k) {
    const Node& nd = net.nodes[k];
    Part p;
    switch (nd.kind) {
      case NodeKind::Input: {
        auto it = bindings.find(nd.slot);
        if (it == bindings.end())
          throw MissingBinding("no binding for slot " +
                               std::to_string(nd.slot));
        p.t = it->second;
        break;
      }
      case NodeKind::Delta:
        p.t = delta();
        break;
      case NodeKind::Epsilon:
        p.t = epsilon();
        break;
      case NodeKind::Projector:
        if (!projectors)
          throw InvalidNode("projector node but no projector provider");
        p.t = projectors(nd.types);
        break;
    }
    const int arity = node_arity(net, k);
    if (p.t.rank() != arity)
      throw ShapeMismatch("node " + std::to_string(k) + " has " +
                          std::to_string(arity) + " legs but its tensor has rank " +
                          std::to_string(p.t.rank()));
    for (int leg = 0; leg < arity; ++leg) p.axes.push_back({k, leg});
    p.min_node = k;
    parts.push_back(std::move(p));
  }

  // Edge extents must agree.
  auto extent_of = [&](const Endpoint& ep) {
    return parts[ep.node].t.shape()[ep.leg];
  };
  for (const auto& e : net.edges)
    if (extent_of(e[0]) != extent_of(e[1]))
      throw ShapeMismatch("edge " + ep_str(e[0]) + "-" + ep_str(e[1]) +
                          " joins extents " +
                          std::to_string(extent_of(e[0])) + " and " +
                          std::to_string(extent_of(e[1])));

  std::vector<int> part_of(n);
  std::iota(part_of.begin(), part_of.end(), 0);
  std::vector<char> alive(n, 1);
  std::vector<Edge> pending = net.edges;

  // Self-edges first.
  for (int k = 0; k < n; ++k) {
    std::vector<Edge> internal;
    std::vector<Edge> rest;
    for (const auto& e : pending)
      (e[0].node == k && e[1].node == k ? internal : rest).push_back(e);
    if (!internal.empty()) {
      absorb_internal(parts[k], internal);
      pending = std::move(rest);
    }
  }

  Rng rng(opts.shuffle_seed);
  while (!pending.empty()) {
    // Group pending edges by unordered part pair.
    std::map<std::pair<int, int>, std::vector<Edge>> grouped;
    for (const auto& e : pending) {
      int pa = part_of[e[0].node], pb = part_of[e[1].node];
      if (pa > pb) std::swap(pa, pb);
      grouped[{pa, pb}].push_back(e);
    }
    std::pair<int, int> chosen{-1, -1};
    if (opts.order == ContractionOptions::Order::Shuffled) {
      const auto it = std::next(grouped.begin(),
                                static_cast<long>(rng.below(grouped.size())));
      chosen = it->first;
    } else {
      double best = std::numeric_limits<double>::infinity();
      std::pair<int, int> best_nodes{-1, -1};
      for (const auto& [pp, es] : grouped) {
        const Part& a = parts[pp.first];
        const Part& b = parts[pp.second];
        double sz = 1.0;
        std::vector<char> ca(a.axes.size(), 0), cb(b.axes.size(), 0);
        for (const auto& e : es)
          for (const auto& ep : e) {
            if (part_of[ep.node] == pp.first) ca[a.axis_of(ep)] = 1;
            else cb[b.axis_of(ep)] = 1;
          }
        for (std::size_t i = 0; i < a.axes.size(); ++i)
          if (!ca[i]) sz *= a.t.shape()[i];
        for (std::size_t i = 0; i < b.axes.size(); ++i)
          if (!cb[i]) sz *= b.t.shape()[i];
        const std::pair<int, int> nodes{parts[pp.first].min_node,
                                        parts[pp.second].min_node};
        if (sz < best || (sz == best && nodes < best_nodes)) {
          best = sz;
          best_nodes = nodes;
          chosen = pp;
        }
      }
    }

    const auto between = grouped[chosen];
    Part merged = merge_parts(parts[chosen.first], parts[chosen.second],
                              between);
    // Re-point membership and drop consumed edges.
    for (int k = 0; k < n; ++k)
      if (part_of[k] == chosen.second) part_of[k] = chosen.first;
    alive[chosen.second] = 0;
    parts[chosen.first] = std::move(merged);
    std::vector<Edge> rest;
    std::vector<Edge> internal;
    for (const auto& e : pending) {
      const int pa = part_of[e[0].node], pb = part_of[e[1].node];
      if (pa == chosen.first && pb == chosen.first) {
        bool consumed = false;
        for (const auto& be : between)
          if (be == e) {
            consumed = true;
            break;
          }
        if (!consumed) internal.push_back(e);
      } else {
        rest.push_back(e);
      }
    }
    absorb_internal(parts[chosen.first], internal);
    pending = std::move(rest);
  }

  // Outer-product any disconnected remainders, lowest node index first.
  std::vector<int> remaining;
  for (int k = 0; k < n; ++k)
    if (alive[k]) remaining.push_back(k);
  Part total = std::move(parts[remaining[0]]);
  for (std::size_t i = 1; i < remaining.size(); ++i)
    total = merge_parts(total, parts[remaining[i]], {});

  if (net.open.empty()) {
    if (!total.axes.empty())
      throw InvalidNode("closed network left free axes");
    return total.t;
  }
  std::vector<int> axes;
  axes.reserve(net.open.size());
  for (const auto& ep : net.open) axes.push_back(total.axis_of(ep));
  return permute(total.t, axes);
}

TensorNetwork remove_node(const TensorNetwork& net, int node) {
  validate(net);
  if (node < 0 || node >= static_cast<int>(net.nodes.size()))
    throw InvalidNode("remove_node: index out of range");
  for (const auto& ep : net.open)
    if (ep.node == node)
      throw InvalidNode("remove_node: node has open legs");

  auto remap = [&](Endpoint ep) {
    if (ep.node > node) --ep.node;
    return ep;
  };

  TensorNetwork out;
  for (int k = 0; k < static_cast<int>(net.nodes.size()); ++k)
    if (k != node) out.nodes.push_back(net.nodes[k]);
  for (const auto& ep : net.open) out.open.push_back(remap(ep));
  for (const auto& e : net.edges) {
    const bool a = e[0].node == node, b = e[1].node == node;
    if (!a && !b) out.edges.push_back({remap(e[0]), remap(e[1])});
  }

  const int arity = node_arity(net, node);
  // Visit the removed node's legs in order; self-edges get a fresh delta
  // node whose two legs stand in for the dangling pair.
  std::vector<Endpoint> pending_open(arity, Endpoint{-1, -1});
  for (const auto& e : net.edges) {
    const bool a = e[0].node == node, b = e[1].node == node;
    if (a && b) {
      const int d = static_cast<int>(out.nodes.size());
      out.nodes.push_back(Node::delta_node());
      pending_open[e[0].leg] = {d, 0};
      pending_open[e[1].leg] = {d, 1};
    } else if (a) {
      pending_open[e[0].leg] = remap(e[1]);
    } else if (b) {
      pending_open[e[1].leg] = remap(e[0]);
    }
  }
  for (int leg = 0; leg < arity; ++leg) {
    if (pending_open[leg].node < 0)
      throw InvalidNode("remove_node: leg bookkeeping failed");
    out.open.push_back(pending_open[leg]);
  }
  return out;
}

Json network_to_json(const TensorNetwork& net) {
  Json j;
  j["nodes"] = Json::array();
  for (const auto& nd : net.nodes) {
    Json n;
    switch (nd.kind) {
      case NodeKind::Input:
        n["kind"] = "input";
        n["slot"] = nd.slot;
        n["copy"] = nd.copy;
        break;
      case NodeKind::Delta:
        n["kind"] = "delta";
        break;
      case NodeKind::Epsilon:
        n["kind"] = "epsilon";
        break;
      case NodeKind::Projector:
        n["kind"] = "projector";
        if (nd.types.size() == 1)
          n["l"] = nd.types[0];
        else
          n["l"] = nd.types;
        break;
    }
    j["nodes"].push_back(std::move(n));
  }
  j["edges"] = Json::array();
  for (const auto& e : net.edges)
    j["edges"].push_back(Json::array(
        {Json::array({e[0].node, e[0].leg}), Json::array({e[1].node, e[1].leg})}));
  j["open"] = Json::array();
  for (const auto& ep : net.open)
    j["open"].push_back(Json::array({ep.node, ep.leg}));
  return j;
}

namespace {

Endpoint endpoint_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer())
    throw InvalidNode("endpoint must be [node, leg]");
  return Endpoint{j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

TensorNetwork network_from_json(const Json& j) {
  TensorNetwork net;
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") ||
      !j.contains("open"))
    throw InvalidNode("network document needs nodes, edges and open");
  for (const auto& n : j.at("nodes")) {
    const std::string kind = n.at("kind").get<std::string>();
    if (kind == "input") {
      net.nodes.push_back(
          Node::input(n.at("slot").get<int>(), n.at("copy").get<int>()));
    } else if (kind == "delta") {
      net.nodes.push_back(Node::delta_node());
    } else if (kind == "epsilon") {
      net.nodes.push_back(Node::epsilon_node());
    } else if (kind == "projector") {
      const auto& l = n.at("l");
      if (l.is_number_integer())
        net.nodes.push_back(Node::projector({l.get<int>()}));
      else
        net.nodes.push_back(Node::projector(l.get<std::vector<int>>()));
    } else {
      throw InvalidNode("unknown node kind '" + kind + "'");
    }
  }
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw InvalidNode("edge must be a pair of endpoints");
    net.edges.push_back({endpoint_from_json(e[0]), endpoint_from_json(e[1])});
  }
  for (const auto& ep : j.at("open")) net.open.push_back(endpoint_from_json(ep));
  validate(net);
  return net;
}

}  // namespace so3tengen
