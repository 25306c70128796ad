#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cnnabs/graph.hpp"
#include "cnnabs/network.hpp"

namespace cnnabs {

// Labelled samples used to rank neurons.
struct TestSet {
  std::vector<std::vector<double>> samples;
  std::vector<std::size_t> labels;
  std::size_t labelCount = 0;

  std::size_t size() const { return samples.size(); }
  // Throws StructuralError on ragged samples or labels out of range.
  void validate(std::size_t inputSize) const;
};

// Row i holds the abstraction layer's values on sample i.
using LayerActivations = std::vector<std::vector<double>>;

LayerActivations layerActivations(const NeuronGraph& graph, std::span<const NodeId> layerNodes,
                                  const TestSet& testSet);

enum class Policy { Centered, AllSamples, SampleRank, SingleClass, MajorityClassVote, Random };

std::string_view toString(Policy p);
Policy parsePolicy(std::string_view name);

std::vector<double> scoreCentered(const LayerShape& shape);
std::vector<double> scoreAllSamples(const LayerActivations& acts);
std::vector<double> scoreSampleRank(const Network& net, std::size_t layer, std::span<const double> x0);
// Falls back to scoreAllSamples when no sample carries targetLabel.
std::vector<double> scoreSingleClass(const LayerActivations& acts, const TestSet& testSet, std::size_t targetLabel);
std::vector<double> scoreMajorityClassVote(const LayerActivations& acts, const TestSet& testSet);
// A seeded permutation of 0..size-1.
std::vector<double> scoreRandom(std::size_t size, std::uint64_t seed);

// Layer positions sorted by ascending score, so the most important neuron
// comes last. Ties keep the lower index later in the refinement sequence.
std::vector<std::size_t> refinementOrder(std::span<const double> scores);

struct PolicyInputs {
  const NeuronGraph* graph = nullptr;
  std::vector<NodeId> layerNodes;
  LayerShape shape;
  const TestSet* testSet = nullptr;  // optional
  std::vector<double> x0;            // the query's reference point
  std::uint64_t seed = 0;
};

// Scores the abstraction layer under `policy`. Policies that need a test set
// fall back to Centered without one.
std::vector<double> scoreLayer(Policy policy, const PolicyInputs& in);

}  // namespace cnnabs
