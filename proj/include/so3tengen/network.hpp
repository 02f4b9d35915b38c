// Tensor networks: typed nodes, edges as unordered endpoint pairs, ordered
// open legs. Delta contractions between inputs are represented as direct
// edges; explicit delta nodes only appear where a dangling identity is
// needed (e.g. after removing a node with a self-edge).
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "so3tengen/json_common.hpp"
#include "so3tengen/tensor.hpp"

namespace so3tengen {

enum class NodeKind { Input, Delta, Epsilon, Projector };

struct Node {
  NodeKind kind = NodeKind::Delta;
  int slot = -1;           // Input only
  int copy = -1;           // Input only
  std::vector<int> types;  // Projector only; one entry per direct summand

  static Node input(int slot, int copy) {
    Node n;
    n.kind = NodeKind::Input;
    n.slot = slot;
    n.copy = copy;
    return n;
  }
  static Node delta_node() { return Node{}; }
  static Node epsilon_node() {
    Node n;
    n.kind = NodeKind::Epsilon;
    return n;
  }
  static Node projector(std::vector<int> types) {
    Node n;
    n.kind = NodeKind::Projector;
    n.types = std::move(types);
    return n;
  }

  friend bool operator==(const Node&, const Node&) = default;
};

struct Endpoint {
  int node = -1;
  int leg = -1;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

using Edge = std::array<Endpoint, 2>;

struct TensorNetwork {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<Endpoint> open;

  friend bool operator==(const TensorNetwork&, const TensorNetwork&) = default;
};

// Slot index -> bound tensor; every copy of a slot binds the same tensor.
using Bindings = std::map<int, Tensor>;

// Supplies the dense tensor of a projector node. Installed by the
// representation layer; the engine itself knows nothing about projectors.
using ProjectorProvider = std::function<Tensor(const std::vector<int>&)>;

// Leg count of a node as referenced by edges and open legs. Legs must cover
// 0..arity-1 exactly once each; validate() enforces this.
int node_arity(const TensorNetwork& net, int node);

// Structural checks: endpoint ranges, single use of every leg, contiguous leg
// numbering, fixed arities (delta 2, epsilon 3, single-type projector l+1).
// Throws InvalidNode.
void validate(const TensorNetwork& net);

struct ContractionOptions {
  enum class Order { Greedy, Shuffled };
  // Greedy picks the pending contraction with the smallest intermediate,
  // breaking ties by lowest involved node index. Shuffled picks uniformly at
  // random (seeded); results must agree, which the tests exploit.
  Order order = Order::Greedy;
  std::uint64_t shuffle_seed = 0;
};

// Contract everything; result axes follow net.open in order (rank 0 for a
// closed network). Throws MissingBinding for unbound input slots and
// ShapeMismatch when edge extents disagree.
Tensor contract_network(const TensorNetwork& net, const Bindings& bindings,
                        const ProjectorProvider& projectors = {},
                        const ContractionOptions& opts = {});

// Delete one node; its edges become open legs appended in the removed node's
// own leg order (existing open legs keep their positions). A self-edge of the
// removed node leaves an explicit delta node behind so both dangling legs
// stay bound together. For a network linear in that node this is exactly the
// derivative with respect to it.
TensorNetwork remove_node(const TensorNetwork& net, int node);

Json network_to_json(const TensorNetwork& net);
TensorNetwork network_from_json(const Json& j);

}  // namespace so3tengen
