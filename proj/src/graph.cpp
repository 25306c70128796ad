#include "cnnabs/graph.hpp"

#include <algorithm>
#include <string>

namespace cnnabs {

NeuronGraph NeuronGraph::fromNetwork(const Network& net) {
  NeuronGraph g;
  std::vector<NodeId> prev;
  std::vector<NodeId> current;
  for (std::size_t li = 0; li < net.layerCount(); ++li) {
    const Layer& layer = net.layer(li);
    current.clear();
    current.reserve(layer.size());
    auto remap = [&prev](const std::vector<Term>& row) {
      std::vector<Term> terms;
      terms.reserve(row.size());
      for (const Term& t : row) terms.push_back({prev[t.source], t.weight});
      return terms;
    };
    for (std::size_t n = 0; n < layer.size(); ++n) {
      const NeuronRef ref{li, n};
      switch (layer.kind) {
        case LayerKind::Input:
          current.push_back(g.addInput(ref));
          break;
        case LayerKind::WeightedSum:
        case LayerKind::Output:
          current.push_back(g.addAffine(layer.affine.bias[n], remap(layer.affine.rows[n]), ref));
          break;
        case LayerKind::Convolution:
          if (layer.isKernelConvolution()) {
            std::vector<Term> terms;
            for (std::size_t j = 0; j < layer.kernel.size(); ++j) {
              if (layer.kernel[j] != 0.0) terms.push_back({prev[n + j], layer.kernel[j]});
            }
            current.push_back(g.addAffine(layer.kernelBias, std::move(terms), ref));
          } else {
            current.push_back(g.addAffine(layer.affine.bias[n], remap(layer.affine.rows[n]), ref));
          }
          break;
        case LayerKind::Relu:
          current.push_back(g.addRelu(prev[n], ref));
          break;
        case LayerKind::MaxPool: {
          std::vector<NodeId> pool(prev.begin() + static_cast<std::ptrdiff_t>(n * layer.poolSize),
                                   prev.begin() + static_cast<std::ptrdiff_t>((n + 1) * layer.poolSize));
          current.push_back(g.addMax(std::move(pool), ref));
          break;
        }
      }
    }
    std::swap(prev, current);
  }
  g.setOutputs(prev);
  return g;
}

void NeuronGraph::checkSource(NodeId source) const {
  if (source >= nodes_.size()) {
    throw StructuralError("node source " + std::to_string(source) + " is not an earlier node");
  }
}

NodeId NeuronGraph::addInput(NeuronRef origin) {
  Node n;
  n.kind = NodeKind::Input;
  n.inputSlot = inputs_.size();
  n.origin = origin;
  nodes_.push_back(std::move(n));
  inputs_.push_back(nodes_.size() - 1);
  return nodes_.size() - 1;
}

NodeId NeuronGraph::addAffine(double bias, std::vector<Term> terms, NeuronRef origin) {
  for (const Term& t : terms) checkSource(t.source);
  Node n;
  n.kind = NodeKind::Affine;
  n.bias = bias;
  n.terms = std::move(terms);
  n.origin = origin;
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

NodeId NeuronGraph::addRelu(NodeId source, NeuronRef origin) {
  checkSource(source);
  Node n;
  n.kind = NodeKind::Relu;
  n.sources = {source};
  n.origin = origin;
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

NodeId NeuronGraph::addMax(std::vector<NodeId> sources, NeuronRef origin) {
  if (sources.empty()) throw StructuralError("max node needs at least one source");
  for (NodeId s : sources) checkSource(s);
  Node n;
  n.kind = NodeKind::Max;
  n.sources = std::move(sources);
  n.origin = origin;
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

void NeuronGraph::setOutputs(std::vector<NodeId> outputs) {
  for (NodeId o : outputs) checkSource(o);
  outputs_ = std::move(outputs);
}

std::vector<NodeId> NeuronGraph::layerNodes(std::size_t layer) const {
  std::vector<NodeId> ids;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].origin.layer == layer) ids.push_back(i);
  }
  std::sort(ids.begin(), ids.end(),
            [this](NodeId a, NodeId b) { return nodes_[a].origin.index < nodes_[b].origin.index; });
  return ids;
}

std::vector<double> NeuronGraph::evaluate(std::span<const double> input) const {
  if (input.size() != inputs_.size()) {
    throw StructuralError("graph expects " + std::to_string(inputs_.size()) + " inputs, got " +
                          std::to_string(input.size()));
  }
  std::vector<double> values(nodes_.size(), 0.0);
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case NodeKind::Input:
        values[i] = input[n.inputSlot];
        break;
      case NodeKind::Affine: {
        double v = n.bias;
        for (const Term& t : n.terms) v += t.weight * values[t.source];
        values[i] = v;
        break;
      }
      case NodeKind::Relu:
        values[i] = std::max(0.0, values[n.sources[0]]);
        break;
      case NodeKind::Max: {
        double v = values[n.sources[0]];
        for (NodeId s : n.sources) v = std::max(v, values[s]);
        values[i] = v;
        break;
      }
    }
  }
  return values;
}

std::vector<double> NeuronGraph::outputValues(std::span<const double> nodeValues) const {
  std::vector<double> out;
  out.reserve(outputs_.size());
  for (NodeId o : outputs_) out.push_back(nodeValues[o]);
  return out;
}

}  // namespace cnnabs
