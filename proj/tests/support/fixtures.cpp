#include "fixtures.hpp"

#include <algorithm>

#include "cnnabs/lp.hpp"

namespace cnnabs::testing {

Network toyCnn() {
  return NetworkBuilder(LayerShape{5})
      .convolution({1.0, -1.3}, 0.2)
      .relu()
      .maxPool(2)
      .weightedSum({{2.0, -1.0}, {3.0, 1.0}}, {5.0, -3.0})
      .output({{1.0, 0.0}, {0.0, 3.0}, {2.0, -1.0}, {0.0, 1.0}}, {10.0, 2.0, -12.0, 0.0})
      .build("toy");
}

VerificationQuery toyBoxQuery() {
  VerificationQuery q;
  q.network = std::make_shared<const NeuronGraph>(NeuronGraph::fromNetwork(toyCnn()));
  q.inputBox = {{0.5, 1.0}, {0.0, 0.5}, {0.5, 1.0}, {0.0, 0.5}, {0.0, 0.5}};
  q.outputConstraints = {{{{1, 1.0}, {0, -1.0}}, 0.0}};
  return q;
}

std::shared_ptr<const NeuronGraph> cancellingGraph() {
  auto g = std::make_shared<NeuronGraph>();
  const NodeId x = g->addInput({0, 0});
  const NodeId h0 = g->addAffine(0.0, {{x, 1.0}}, {1, 0});
  const NodeId h1 = g->addAffine(0.0, {{h0, 1.0}}, {2, 0});
  const NodeId y = g->addAffine(0.0, {{h1, 1.0}, {x, -1.0}}, {3, 0});
  g->setOutputs({y});
  return g;
}

VerificationQuery cancellingQuery(double threshold) {
  VerificationQuery q;
  q.network = cancellingGraph();
  q.inputBox = {{-1.0, 1.0}};
  q.outputConstraints = {{{{0, -1.0}}, threshold}};
  return q;
}

Network cancellingNetwork() {
  return NetworkBuilder(LayerShape{1})
      .weightedSum({{1.0}, {1.0}}, {0.0, 0.0})
      .weightedSum({{1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0})
      .output({{1.0, -1.0}}, {0.0})
      .build("cancelling");
}

std::shared_ptr<const NeuronGraph> pairMaxGraph() {
  auto g = std::make_shared<NeuronGraph>();
  std::vector<NodeId> x;
  for (std::size_t i = 0; i < 4; ++i) x.push_back(g->addInput({0, i}));
  std::vector<NodeId> c;
  for (std::size_t i = 0; i < 3; ++i) c.push_back(g->addAffine(0.0, {{x[i], 1.0}, {x[i + 1], -1.0}}, {1, i}));
  const NodeId m0 = g->addMax({c[0], c[1]}, {2, 0});
  const NodeId m1 = g->addMax({c[1], c[2]}, {2, 1});
  const NodeId y = g->addAffine(0.0, {{m0, 1.0}, {m1, 1.0}}, {3, 0});
  g->setOutputs({y});
  return g;
}

VerificationQuery pairMaxQuery() {
  VerificationQuery q;
  q.network = pairMaxGraph();
  q.inputBox = {{-1.0, 1.0}, {-1.0, 1.0}, {-2.0, 2.0}, {-2.0, 2.0}};
  return q;
}

Network pairMaxNetwork() {
  SparseAffine conv;
  conv.rows = {{{0, 1.0}, {1, -1.0}}, {{1, 1.0}, {2, -1.0}}, {{1, 1.0}, {2, -1.0}}, {{2, 1.0}, {3, -1.0}}};
  conv.bias = {0.0, 0.0, 0.0, 0.0};
  return NetworkBuilder(LayerShape{4}).loweredConvolution(conv).maxPool(2).output({{1.0, 1.0}}, {0.0}).build("pair_max");
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<std::vector<double>> randomMatrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::vector<std::vector<double>> w(rows, std::vector<double>(cols));
  for (auto& r : w) {
    for (double& v : r) v = uniform(rng, -1.5, 1.5);
  }
  return w;
}

std::vector<double> randomVector(std::mt19937_64& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, -scale, scale);
  return v;
}

}  // namespace

Network randomCnn(std::mt19937_64& rng, const RandomNetSpec& spec) {
  for (;;) {
    const std::size_t n = pick(rng, 3, 7);
    const std::size_t k = pick(rng, 1, std::min<std::size_t>(3, n - 1));
    const std::size_t convSize = n - k + 1;
    NetworkBuilder b(LayerShape{n});
    std::size_t size = convSize;
    if (pick(rng, 0, 2) == 0) {
      // Lowered form with two channels over a shorter window.
      const std::size_t channels = 2;
      const std::size_t width = std::max<std::size_t>(1, convSize / 2);
      SparseAffine conv;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const auto kernel = randomVector(rng, k, 1.5);
        const double bias = uniform(rng, -0.5, 0.5);
        for (std::size_t i = 0; i < width; ++i) {
          std::vector<Term> row;
          for (std::size_t j = 0; j < k; ++j) row.push_back({i + j, kernel[j]});
          conv.rows.push_back(std::move(row));
          conv.bias.push_back(bias);
        }
      }
      b.loweredConvolution(conv, LayerShape{channels, width});
      size = channels * width;
    } else {
      b.convolution(randomVector(rng, k, 1.5), uniform(rng, -0.5, 0.5));
    }
    std::size_t pl = 0;
    const bool relu = pick(rng, 0, 3) != 0;
    if (relu) {
      b.relu();
      pl += size;
    }
    if (size >= 2 && pick(rng, 0, 3) != 0) {
      const std::size_t pool = size % 2 == 0 ? 2 : (size % 3 == 0 ? 3 : 1);
      b.maxPool(pool);
      size /= pool;
      pl += size;
    }
    if (pick(rng, 0, 1) == 0) {
      const std::size_t width = pick(rng, 2, 3);
      b.weightedSum(randomMatrix(rng, width, size), randomVector(rng, width, 0.5));
      b.relu();
      pl += width;
      size = width;
    }
    const std::size_t outputs = pick(rng, 2, 3);
    b.output(randomMatrix(rng, outputs, size), randomVector(rng, outputs, 0.5));
    Network net = b.build("random");
    if (pl >= 1 && pl <= spec.maxPlConstraints && net.neuronCount() <= spec.maxNeurons) return net;
  }
}

VerificationQuery randomQuery(const Network& net, std::mt19937_64& rng) {
  VerificationQuery q;
  q.network = std::make_shared<const NeuronGraph>(NeuronGraph::fromNetwork(net));
  for (std::size_t i = 0; i < net.inputSize(); ++i) {
    const double center = uniform(rng, -0.8, 0.8);
    const double radius = uniform(rng, 0.01, 0.6);
    q.inputBox.push_back({std::max(-1.0, center - radius), std::min(1.0, center + radius)});
  }
  // Output range estimate from samples.
  std::vector<std::vector<double>> outs;
  for (int s = 0; s < 16; ++s) {
    const auto x = samplePoint(q.inputBox, rng);
    outs.push_back(q.network->outputValues(q.network->evaluate(x)));
  }
  const std::size_t atoms = pick(rng, 1, 2);
  for (std::size_t a = 0; a < atoms; ++a) {
    OutputConstraint c;
    for (std::size_t j = 0; j < net.outputSize(); ++j) {
      if (pick(rng, 0, 2) != 0) c.terms.push_back({j, uniform(rng, -1.0, 1.0)});
    }
    if (c.terms.empty()) c.terms.push_back({0, 1.0});
    double lo = kInfinity, hi = -kInfinity;
    for (const auto& o : outs) {
      double v = 0.0;
      for (const Term& t : c.terms) v += t.weight * o[t.source];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // Threshold near or below the sampled minimum: SAT when reached, often UNSAT.
    const double span = std::max(hi - lo, 0.1);
    c.constant = -(lo - uniform(rng, -0.2, 0.4) * span);
    q.outputConstraints.push_back(std::move(c));
  }
  return q;
}

std::size_t plConstraintCount(const NeuronGraph& graph) {
  return static_cast<std::size_t>(std::count_if(graph.nodes().begin(), graph.nodes().end(), [](const Node& n) {
    return n.kind == NodeKind::Relu || n.kind == NodeKind::Max;
  }));
}

std::vector<double> samplePoint(std::span<const Interval> box, std::mt19937_64& rng) {
  std::vector<double> x;
  for (const Interval& b : box) x.push_back(b.lower == b.upper ? b.lower : uniform(rng, b.lower, b.upper));
  return x;
}

}  // namespace cnnabs::testing
