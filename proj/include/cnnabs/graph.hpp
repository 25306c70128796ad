#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "cnnabs/network.hpp"

namespace cnnabs {

using NodeId = std::size_t;

// Position of a neuron in the layered network it came from.
struct NeuronRef {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t layer = kNone;
  std::size_t index = kNone;

  bool operator==(const NeuronRef&) const = default;
};

enum class NodeKind { Input, Affine, Relu, Max };

struct Node {
  NodeKind kind = NodeKind::Input;
  // Input: position in the graph's input vector.
  std::size_t inputSlot = 0;
  // Affine: bias + sum of weighted source node values.
  double bias = 0.0;
  std::vector<Term> terms;
  // Relu (one source) and Max (one or more sources).
  std::vector<NodeId> sources;
  NeuronRef origin;

  bool operator==(const Node&) const = default;
};

// Neuron-level acyclic graph. Node ids are a topological order: every node
// only reads from nodes with smaller ids. This is the form the bound
// propagation, abstraction and search modules operate on; abstract networks
// (cut edges, extra inputs, pruned neurons) are NeuronGraphs too.
class NeuronGraph {
 public:
  static NeuronGraph fromNetwork(const Network& net);

  NodeId addInput(NeuronRef origin = {});
  NodeId addAffine(double bias, std::vector<Term> terms, NeuronRef origin = {});
  NodeId addRelu(NodeId source, NeuronRef origin = {});
  NodeId addMax(std::vector<NodeId> sources, NeuronRef origin = {});
  void setOutputs(std::vector<NodeId> outputs);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<NodeId>& inputs() const { return inputs_; }
  const std::vector<NodeId>& outputs() const { return outputs_; }
  std::size_t inputCount() const { return inputs_.size(); }
  std::size_t outputCount() const { return outputs_.size(); }

  // Nodes whose origin lies in `layer`, ordered by neuron index.
  std::vector<NodeId> layerNodes(std::size_t layer) const;

  // Value of every node.
  std::vector<double> evaluate(std::span<const double> input) const;
  std::vector<double> outputValues(std::span<const double> nodeValues) const;

  bool operator==(const NeuronGraph&) const = default;

 private:
  void checkSource(NodeId source) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> inputs_;
  std::vector<NodeId> outputs_;
};

}  // namespace cnnabs
