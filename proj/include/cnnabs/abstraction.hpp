#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <vector>

#include "cnnabs/bounds.hpp"
#include "cnnabs/graph.hpp"
#include "cnnabs/network.hpp"
#include "cnnabs/query.hpp"

namespace cnnabs {

class NoConvolutionalPrefix : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

// Deepest Convolution or MaxPool layer not preceded by a WeightedSum layer.
// Throws NoConvolutionalPrefix if there is none.
std::size_t selectAbstractionLayer(const Network& net);

struct AbstractionState {
  std::shared_ptr<const NeuronGraph> original;
  std::size_t layer = 0;
  // Nodes of the abstraction layer in the original graph, by neuron index.
  std::vector<NodeId> layerNodes;
  // Refinement score per entry of layerNodes; empty means all equal.
  std::vector<double> scores;

  // V, as original node ids.
  std::set<NodeId> abstracted;
  // Original hidden nodes with no path to an output once V is cut.
  std::set<NodeId> pruned;
  std::shared_ptr<const NeuronGraph> graph;
  // Original node id of every abstract node.
  std::vector<NodeId> originalOf;
  // P_B: bounds of the promoted inputs, in ascending node id order of V.
  std::vector<Interval> promotedBounds;

  // Abstract node count over original node count.
  double sizeRatio() const;
};

// Cuts the incoming edges of V, turns V into bounded inputs (appended after
// the original inputs) and prunes what no longer reaches an output. Empty V
// gives the original graph unchanged.
AbstractionState abstract(std::shared_ptr<const NeuronGraph> original, const BoundsMap& bounds,
                          std::size_t layer, const std::set<NodeId>& V, std::vector<double> scores = {});

// Restores the `count` highest-scoring neurons of V (ties: lower neuron index).
AbstractionState refine(const AbstractionState& state, const BoundsMap& bounds, std::size_t count);

// Drops the values of the promoted inputs.
std::vector<double> liftCex(const AbstractionState& state, std::span<const double> abstractCex);

// <P and P_B, abstract network, Q>.
VerificationQuery abstractQuery(const AbstractionState& state, const VerificationQuery& original);

// Bounds for the abstract graph: an interval pass over the abstract query's
// box, intersected with the original bounds of the corresponding nodes. The
// intersection stays sound because every original execution is an abstract
// one with identical node values.
BoundsMap abstractBounds(const AbstractionState& state, const VerificationQuery& abstractQuery,
                         const BoundsMap& originalBounds);

}  // namespace cnnabs
