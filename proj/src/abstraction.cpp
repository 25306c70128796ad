#include "cnnabs/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

namespace cnnabs {

std::size_t selectAbstractionLayer(const Network& net) {
  std::optional<std::size_t> best;
  for (std::size_t i = 1; i + 1 < net.layerCount(); ++i) {
    const LayerKind kind = net.layer(i).kind;
    if (kind == LayerKind::WeightedSum) break;
    if (kind == LayerKind::Convolution || kind == LayerKind::MaxPool) best = i;
  }
  if (!best) throw NoConvolutionalPrefix("network '" + net.name() + "' has no convolutional prefix to abstract");
  return *best;
}

double AbstractionState::sizeRatio() const {
  return static_cast<double>(graph->size()) / static_cast<double>(original->size());
}

AbstractionState abstract(std::shared_ptr<const NeuronGraph> original, const BoundsMap& bounds, std::size_t layer,
                          const std::set<NodeId>& V, std::vector<double> scores) {
  const NeuronGraph& g = *original;
  AbstractionState s;
  s.original = original;
  s.layer = layer;
  s.layerNodes = g.layerNodes(layer);
  if (!scores.empty() && scores.size() != s.layerNodes.size()) {
    throw StructuralError("score vector does not match the abstraction layer size");
  }
  s.scores = std::move(scores);
  for (NodeId v : V) {
    if (std::find(s.layerNodes.begin(), s.layerNodes.end(), v) == s.layerNodes.end()) {
      throw StructuralError("node " + std::to_string(v) + " is not in abstraction layer " + std::to_string(layer));
    }
    const Interval& b = bounds[v];
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper)) {
      throw StructuralError("abstract neuron " + std::to_string(v) + " has unbounded range");
    }
  }
  s.abstracted = V;

  if (V.empty()) {
    s.graph = original;
    s.originalOf.resize(g.size());
    std::iota(s.originalOf.begin(), s.originalOf.end(), NodeId{0});
    return s;
  }

  // Backward reachability from the outputs, not crossing into V.
  std::vector<bool> keep(g.size(), false);
  std::vector<NodeId> stack(g.outputs().begin(), g.outputs().end());
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (keep[id]) continue;
    keep[id] = true;
    if (V.contains(id)) continue;
    const Node& n = g.node(id);
    for (const Term& t : n.terms) stack.push_back(t.source);
    for (NodeId src : n.sources) stack.push_back(src);
  }

  auto abstractGraph = std::make_shared<NeuronGraph>();
  std::vector<NodeId> remap(g.size(), NeuronRef::kNone);
  for (NodeId in : g.inputs()) {
    remap[in] = abstractGraph->addInput(g.node(in).origin);
    s.originalOf.push_back(in);
  }
  for (NodeId v : V) {
    remap[v] = abstractGraph->addInput(g.node(v).origin);
    s.originalOf.push_back(v);
    s.promotedBounds.push_back(bounds[v]);
  }
  for (NodeId id = 0; id < g.size(); ++id) {
    const Node& n = g.node(id);
    if (n.kind == NodeKind::Input || V.contains(id)) continue;
    if (!keep[id]) {
      s.pruned.insert(id);
      continue;
    }
    switch (n.kind) {
      case NodeKind::Affine: {
        std::vector<Term> terms;
        terms.reserve(n.terms.size());
        for (const Term& t : n.terms) terms.push_back({remap[t.source], t.weight});
        remap[id] = abstractGraph->addAffine(n.bias, std::move(terms), n.origin);
        break;
      }
      case NodeKind::Relu:
        remap[id] = abstractGraph->addRelu(remap[n.sources[0]], n.origin);
        break;
      case NodeKind::Max: {
        std::vector<NodeId> sources;
        for (NodeId src : n.sources) sources.push_back(remap[src]);
        remap[id] = abstractGraph->addMax(std::move(sources), n.origin);
        break;
      }
      case NodeKind::Input:
        break;
    }
    s.originalOf.push_back(id);
  }
  std::vector<NodeId> outputs;
  for (NodeId out : g.outputs()) outputs.push_back(remap[out]);
  abstractGraph->setOutputs(std::move(outputs));
  s.graph = std::move(abstractGraph);
  return s;
}

AbstractionState refine(const AbstractionState& state, const BoundsMap& bounds, std::size_t count) {
  if (state.abstracted.empty()) throw StructuralError("refine called with no abstract neurons left");
  if (count == 0) throw StructuralError("refinement step must be at least 1");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < state.layerNodes.size(); ++i) {
    if (state.abstracted.contains(state.layerNodes[i])) candidates.push_back(i);
  }
  auto score = [&state](std::size_t i) { return state.scores.empty() ? 0.0 : state.scores[i]; };
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return score(a) > score(b); });

  std::set<NodeId> remaining = state.abstracted;
  for (std::size_t i = 0; i < std::min(count, candidates.size()); ++i) remaining.erase(state.layerNodes[candidates[i]]);
  return abstract(state.original, bounds, state.layer, remaining, state.scores);
}

std::vector<double> liftCex(const AbstractionState& state, std::span<const double> abstractCex) {
  const std::size_t n = state.original->inputCount();
  if (abstractCex.size() < n) throw StructuralError("abstract counterexample is shorter than the original input");
  return {abstractCex.begin(), abstractCex.begin() + static_cast<std::ptrdiff_t>(n)};
}

VerificationQuery abstractQuery(const AbstractionState& state, const VerificationQuery& original) {
  VerificationQuery q;
  q.network = state.graph;
  q.inputBox = original.inputBox;
  q.inputBox.insert(q.inputBox.end(), state.promotedBounds.begin(), state.promotedBounds.end());
  q.outputConstraints = original.outputConstraints;
  return q;
}

BoundsMap abstractBounds(const AbstractionState& state, const VerificationQuery& query,
                         const BoundsMap& originalBounds) {
  BoundsMap b = intervalPass(*state.graph, query.inputBox);
  for (NodeId id = 0; id < b.size(); ++id) {
    const Interval& o = originalBounds[state.originalOf[id]];
    b[id].lower = std::max(b[id].lower, o.lower);
    b[id].upper = std::min(b[id].upper, o.upper);
  }
  return b;
}

}  // namespace cnnabs
