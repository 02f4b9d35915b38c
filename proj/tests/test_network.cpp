#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "so3tengen/network.hpp"
#include "so3tengen/rng.hpp"

using namespace so3tengen;

namespace {

Tensor random_tensor(Rng& rng, const std::vector<int>& shape) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

struct RandomNet {
  TensorNetwork net;
  Bindings bindings;
};

// Random network over input nodes with extent-3 legs plus the occasional
// epsilon node; a random subset of legs is paired, the rest stay open.
RandomNet make_random_network(Rng& rng, int max_nodes) {
  RandomNet rn;
  const int n_nodes = 2 + static_cast<int>(rng.below(max_nodes - 1));
  std::vector<Endpoint> legs;
  for (int k = 0; k < n_nodes; ++k) {
    int arity;
    if (rng.uniform() < 0.2) {
      rn.net.nodes.push_back(Node::epsilon_node());
      arity = 3;
    } else {
      arity = 1 + static_cast<int>(rng.below(3));
      rn.net.nodes.push_back(Node::input(k, 0));
      std::vector<int> shape(arity, 3);
      rn.bindings.emplace(k, random_tensor(rng, shape));
    }
    for (int leg = 0; leg < arity; ++leg) legs.push_back({k, leg});
  }
  // Shuffle legs, then pair a prefix of even length.
  for (std::size_t i = legs.size(); i > 1; --i)
    std::swap(legs[i - 1], legs[rng.below(i)]);
  std::size_t n_paired = rng.below(legs.size() + 1) & ~std::size_t{1};
  for (std::size_t i = 0; i + 1 < n_paired; i += 2)
    rn.net.edges.push_back({legs[i], legs[i + 1]});
  for (std::size_t i = n_paired; i < legs.size(); ++i)
    rn.net.open.push_back(legs[i]);
  return rn;
}

}  // namespace

TEST_CASE("closed dot-product network") {
  TensorNetwork net;
  net.nodes = {Node::input(0, 0), Node::input(1, 0)};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}}};
  Bindings b;
  Tensor x({3}), y({3});
  for (int i = 0; i < 3; ++i) {
    x[i] = i + 1;
    y[i] = i + 4;
  }
  b.emplace(0, x);
  b.emplace(1, y);
  CHECK(contract_network(net, b).value() == 32.0);

  SUBCASE("removing one factor leaves the other") {
    const TensorNetwork d = remove_node(net, 1);
    CHECK(d.nodes.size() == 1);
    CHECK(d.open.size() == 1);
    const Tensor v = contract_network(d, b);
    CHECK(max_abs_diff(v, x) == 0.0);
  }
}

TEST_CASE("validation catches malformed networks") {
  TensorNetwork net;
  net.nodes = {Node::delta_node()};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}}};
  CHECK_THROWS_AS(validate(net), InvalidNode);

  net.edges = {{Endpoint{0, 0}, Endpoint{0, 0}}};
  CHECK_THROWS_AS(validate(net), InvalidNode);

  // Delta with three legs.
  net.nodes = {Node::delta_node(), Node::epsilon_node()};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}},
               {Endpoint{0, 1}, Endpoint{1, 1}},
               {Endpoint{0, 2}, Endpoint{1, 2}}};
  CHECK_THROWS_AS(validate(net), InvalidNode);

  // Leg gap: input uses legs 0 and 2 only.
  net.nodes = {Node::input(0, 0), Node::delta_node()};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}},
               {Endpoint{0, 2}, Endpoint{1, 1}}};
  CHECK_THROWS_AS(validate(net), InvalidNode);

  // Unbound slot.
  net.nodes = {Node::input(0, 0), Node::input(1, 0)};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}}};
  Bindings b;
  b.emplace(0, Tensor({3}));
  CHECK_THROWS_AS(contract_network(net, b), MissingBinding);

  // Projector node without a provider.
  net.nodes = {Node::projector({1}), Node::delta_node()};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}},
               {Endpoint{0, 1}, Endpoint{1, 1}}};
  CHECK_THROWS_AS(contract_network(net, {}), InvalidNode);

  // Mismatched extents across an edge.
  net.nodes = {Node::input(0, 0), Node::delta_node()};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}}};
  net.open = {Endpoint{1, 1}};
  Bindings b2;
  b2.emplace(0, Tensor({5}));
  CHECK_THROWS_AS(contract_network(net, b2), ShapeMismatch);
}

TEST_CASE("matrix trace network and its derivative") {
  // tr(C): one input with a self-edge.
  TensorNetwork net;
  net.nodes = {Node::input(0, 0)};
  net.edges = {{Endpoint{0, 0}, Endpoint{0, 1}}};
  Rng rng(11);
  Bindings b;
  b.emplace(0, random_tensor(rng, {3, 3}));
  double tr = 0;
  for (int i = 0; i < 3; ++i) tr += b.at(0).at({i, i});
  CHECK(contract_network(net, b).value() == doctest::Approx(tr).epsilon(1e-15));

  // d tr(C) / dC = identity, realized through an inserted delta node.
  const TensorNetwork d = remove_node(net, 0);
  REQUIRE(d.nodes.size() == 1);
  CHECK(d.nodes[0].kind == NodeKind::Delta);
  REQUIRE(d.open.size() == 2);
  const Tensor id = contract_network(d, {});
  CHECK(max_abs_diff(id, delta()) == 0.0);
}

TEST_CASE("greedy order, shuffled order and re-binding agree") {
  Rng rng(2024);
  int tested = 0;
  while (tested < 25) {
    RandomNet rn = make_random_network(rng, 6);
    const Tensor ref = contract_network(rn.net, rn.bindings);
    ++tested;

    const double scale = 1.0 + frobenius_norm(ref);
    for (std::uint64_t s = 1; s <= 3; ++s) {
      ContractionOptions opts;
      opts.order = ContractionOptions::Order::Shuffled;
      opts.shuffle_seed = s;
      const Tensor alt = contract_network(rn.net, rn.bindings, {}, opts);
      REQUIRE(alt.shape() == ref.shape());
      CHECK(max_abs_diff(alt, ref) <= 1e-12 * scale);
    }

    // Remove each input node that has no open legs, re-bind, compare.
    for (int k = 0; k < static_cast<int>(rn.net.nodes.size()); ++k) {
      if (rn.net.nodes[k].kind != NodeKind::Input) continue;
      bool has_open = false;
      for (const auto& ep : rn.net.open) has_open |= ep.node == k;
      if (has_open) continue;
      const TensorNetwork d = remove_node(rn.net, k);
      const Tensor partial = contract_network(d, rn.bindings);
      const Tensor& val = rn.bindings.at(rn.net.nodes[k].slot);
      std::vector<std::pair<int, int>> pairs;
      const int base = static_cast<int>(rn.net.open.size());
      for (int leg = 0; leg < val.rank(); ++leg)
        pairs.emplace_back(base + leg, leg);
      const Tensor rebound = contract(partial, val, pairs);
      REQUIRE(rebound.shape() == ref.shape());
      CHECK(max_abs_diff(rebound, ref) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("json round trip is exact") {
  Rng rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    RandomNet rn = make_random_network(rng, 5);
    const Json j = network_to_json(rn.net);
    const TensorNetwork back = network_from_json(j);
    CHECK(back == rn.net);
    // Serialized text round-trips too.
    const TensorNetwork back2 = network_from_json(Json::parse(j.dump()));
    CHECK(back2 == rn.net);
  }

  // Schema shape: field names and node kinds.
  TensorNetwork net;
  net.nodes = {Node::input(0, 0), Node::projector({2}),
               Node::projector({1, 3}), Node::epsilon_node()};
  net.edges = {{Endpoint{0, 0}, Endpoint{1, 0}},
               {Endpoint{1, 1}, Endpoint{2, 1}},
               {Endpoint{1, 2}, Endpoint{2, 2}},
               {Endpoint{2, 0}, Endpoint{3, 0}},
               {Endpoint{2, 3}, Endpoint{3, 1}},
               {Endpoint{2, 4}, Endpoint{3, 2}}};
  const Json j = network_to_json(net);
  CHECK(j["nodes"][0] == Json({{"kind", "input"}, {"slot", 0}, {"copy", 0}}));
  CHECK(j["nodes"][1] == Json({{"kind", "projector"}, {"l", 2}}));
  CHECK(j["nodes"][2]["l"] == Json::array({1, 3}));
  CHECK(j["nodes"][3] == Json({{"kind", "epsilon"}}));
  CHECK(j["edges"][0] == Json::parse("[[0,0],[1,0]]"));
  CHECK(network_from_json(j) == net);

  CHECK_THROWS_AS(network_from_json(Json::parse("{\"nodes\":[]}")),
                  InvalidNode);
  CHECK_THROWS_AS(
      network_from_json(Json::parse(
          "{\"nodes\":[{\"kind\":\"wat\"}],\"edges\":[],\"open\":[]}")),
      InvalidNode);
}

TEST_CASE("open leg ordering follows the open list") {
  // Two-leg input fully open, with open order reversed.
  TensorNetwork net;
  net.nodes = {Node::input(0, 0)};
  net.open = {Endpoint{0, 1}, Endpoint{0, 0}};
  Rng rng(3);
  Bindings b;
  b.emplace(0, random_tensor(rng, {3, 3}));
  const Tensor out = contract_network(net, b);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(out.at({i, j}) == b.at(0).at({j, i}));
}
