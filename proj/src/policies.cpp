#include "cnnabs/policies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "cnnabs/log.hpp"
#include "cnnabs/query.hpp"

namespace cnnabs {

void TestSet::validate(std::size_t inputSize) const {
  if (labels.size() != samples.size()) throw StructuralError("test set has a different number of samples and labels");
  for (const auto& s : samples) {
    if (s.size() != inputSize) throw StructuralError("test sample length does not match the network input size");
  }
  for (std::size_t l : labels) {
    if (l >= labelCount) throw StructuralError("test label " + std::to_string(l) + " out of range");
  }
}

LayerActivations layerActivations(const NeuronGraph& graph, std::span<const NodeId> layerNodes,
                                  const TestSet& testSet) {
  LayerActivations acts;
  acts.reserve(testSet.size());
  for (const auto& sample : testSet.samples) {
    const std::vector<double> values = graph.evaluate(sample);
    std::vector<double> row;
    row.reserve(layerNodes.size());
    for (NodeId id : layerNodes) row.push_back(values[id]);
    acts.push_back(std::move(row));
  }
  return acts;
}

namespace {

constexpr std::array<std::pair<Policy, std::string_view>, 6> kPolicyNames{{
    {Policy::Centered, "centered"},
    {Policy::AllSamples, "allsamples"},
    {Policy::SampleRank, "samplerank"},
    {Policy::SingleClass, "singleclass"},
    {Policy::MajorityClassVote, "majorityclassvote"},
    {Policy::Random, "random"},
}};

std::size_t layerWidth(const LayerActivations& acts) { return acts.empty() ? 0 : acts.front().size(); }

// Per-class mean activation of every neuron; classes without samples stay empty.
std::vector<std::vector<double>> classMeans(const LayerActivations& acts, const TestSet& testSet) {
  const std::size_t width = layerWidth(acts);
  std::vector<std::vector<double>> sums(testSet.labelCount);
  std::vector<std::size_t> counts(testSet.labelCount, 0);
  for (std::size_t i = 0; i < acts.size(); ++i) {
    auto& s = sums[testSet.labels[i]];
    if (s.empty()) s.assign(width, 0.0);
    for (std::size_t v = 0; v < width; ++v) s[v] += acts[i][v];
    ++counts[testSet.labels[i]];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
  }
  return sums;
}

}  // namespace

std::string_view toString(Policy p) {
  for (const auto& [k, n] : kPolicyNames) {
    if (k == p) return n;
  }
  return "unknown";
}

Policy parsePolicy(std::string_view name) {
  for (const auto& [k, n] : kPolicyNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

std::vector<double> scoreCentered(const LayerShape& shape) {
  std::vector<double> scores(shape.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto coords = neuronCoordinates(shape, i);
    double sq = 0.0;
    for (std::size_t d = 0; d < coords.size(); ++d) {
      const double diff = static_cast<double>(coords[d]) - static_cast<double>(shape.dims()[d] / 2);
      sq += diff * diff;
    }
    scores[i] = -std::sqrt(sq);
  }
  return scores;
}

std::vector<double> scoreAllSamples(const LayerActivations& acts) {
  std::vector<double> scores(layerWidth(acts), 0.0);
  for (const auto& row : acts) {
    for (std::size_t v = 0; v < scores.size(); ++v) scores[v] += row[v];
  }
  for (double& s : scores) s /= static_cast<double>(acts.size());
  return scores;
}

std::vector<double> scoreSampleRank(const Network& net, std::size_t layer, std::span<const double> x0) {
  return evaluate(net, x0).layers.at(layer);
}

std::vector<double> scoreSingleClass(const LayerActivations& acts, const TestSet& testSet, std::size_t targetLabel) {
  if (targetLabel < testSet.labelCount) {
    auto means = classMeans(acts, testSet);
    if (!means[targetLabel].empty()) return means[targetLabel];
  }
  log::info("no test sample has label {}; scoring with all samples", targetLabel);
  return scoreAllSamples(acts);
}

std::vector<double> scoreMajorityClassVote(const LayerActivations& acts, const TestSet& testSet) {
  std::vector<double> scores(layerWidth(acts), 0.0);
  for (const auto& mean : classMeans(acts, testSet)) {
    for (std::size_t v = 0; v < mean.size(); ++v) scores[v] += mean[v] * mean[v];
  }
  for (double& s : scores) s = std::sqrt(s);
  return scores;
}

std::vector<double> scoreRandom(std::size_t size, std::uint64_t seed) {
  std::vector<double> scores(size);
  std::iota(scores.begin(), scores.end(), 0.0);
  std::mt19937_64 rng(seed);
  std::shuffle(scores.begin(), scores.end(), rng);
  return scores;
}

std::vector<std::size_t> refinementOrder(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Refinement sequence: highest score first, ties by ascending index.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<double> scoreLayer(Policy policy, const PolicyInputs& in) {
  const bool needsSamples =
      policy == Policy::AllSamples || policy == Policy::SingleClass || policy == Policy::MajorityClassVote;
  if (needsSamples && (in.testSet == nullptr || in.testSet->size() == 0)) {
    log::info("policy {} needs a test set; using centered", toString(policy));
    policy = Policy::Centered;
  }
  switch (policy) {
    case Policy::Centered:
      return scoreCentered(in.shape);
    case Policy::Random:
      return scoreRandom(in.layerNodes.size(), in.seed);
    case Policy::SampleRank: {
      const std::vector<double> values = in.graph->evaluate(in.x0);
      std::vector<double> scores;
      for (NodeId id : in.layerNodes) scores.push_back(values[id]);
      return scores;
    }
    case Policy::AllSamples:
      return scoreAllSamples(layerActivations(*in.graph, in.layerNodes, *in.testSet));
    case Policy::SingleClass: {
      const std::vector<double> values = in.graph->evaluate(in.x0);
      const auto outputs = in.graph->outputValues(values);
      std::size_t label = 0;
      if (outputs.size() >= 2) {
        label = topTwo(outputs).first;
      }
      return scoreSingleClass(layerActivations(*in.graph, in.layerNodes, *in.testSet), *in.testSet, label);
    }
    case Policy::MajorityClassVote:
      return scoreMajorityClassVote(layerActivations(*in.graph, in.layerNodes, *in.testSet), *in.testSet);
  }
  return {};
}

}  // namespace cnnabs
