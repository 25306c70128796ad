#include <gtest/gtest.h>

#include <random>

#include "cnnabs/graph.hpp"
#include "cnnabs/network.hpp"
#include "fixtures.hpp"

namespace cnnabs {
namespace {

using testing::toyCnn;

TEST(Evaluate, ToyCnnGoldenOutput) {
  const Network net = toyCnn();
  const std::vector<double> x{1, 0, 1, 0, 0};
  const Assignment a = evaluate(net, x);
  const std::vector<double> expected{16.2, 7.4, -1.4, 1.8};
  ASSERT_EQ(a.output().size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(a.output()[j], expected[j], 1e-9);
}

TEST(Evaluate, ToyCnnIntermediateLayers) {
  const Assignment a = evaluate(toyCnn(), std::vector<double>{1, 0, 1, 0, 0});
  const std::vector<double> conv{1.2, -1.1, 1.2, 0.2}, relu{1.2, 0, 1.2, 0.2}, pool{1.2, 1.2}, ws{6.2, 1.8};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(a.layers[1][i], conv[i], 1e-12);
    EXPECT_NEAR(a.layers[2][i], relu[i], 1e-12);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(a.layers[3][i], pool[i], 1e-12);
    EXPECT_NEAR(a.layers[4][i], ws[i], 1e-12);
  }
}

TEST(Evaluate, ZeroNetworkGivesZeros) {
  const Network net = NetworkBuilder(LayerShape{3})
                          .convolution({0.0, 0.0}, 0.0)
                          .relu()
                          .maxPool(2)
                          .weightedSum({{0.0}}, {0.0})
                          .output({{0.0}, {0.0}}, {0.0, 0.0})
                          .build();
  const Assignment a = evaluate(net, std::vector<double>{0.3, -2.0, 5.0});
  for (std::size_t l = 1; l < a.layers.size(); ++l) {
    for (double v : a.layers[l]) EXPECT_EQ(v, 0.0);
  }
}

TEST(Evaluate, MaxPoolEqualsPoolMaximum) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Network net = testing::randomCnn(rng);
    std::vector<double> x(net.inputSize());
    for (double& v : x) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Assignment a = evaluate(net, x);
    for (std::size_t l = 1; l < net.layerCount(); ++l) {
      const Layer& layer = net.layer(l);
      if (layer.kind != LayerKind::MaxPool) continue;
      for (std::size_t i = 0; i < layer.size(); ++i) {
        double m = a.layers[l - 1][i * layer.poolSize];
        for (std::size_t j = 1; j < layer.poolSize; ++j) m = std::max(m, a.layers[l - 1][i * layer.poolSize + j]);
        EXPECT_EQ(a.layers[l][i], m);
      }
    }
  }
}

TEST(Evaluate, RejectsWrongInputSize) {
  EXPECT_THROW(evaluate(toyCnn(), std::vector<double>{1, 2}), StructuralError);
}

TEST(Flatten, ToyCnnConvolutionBecomesBandedMatrix) {
  const Network flat = flatten(toyCnn());
  const Layer& conv = flat.layer(1);
  ASSERT_EQ(conv.kind, LayerKind::WeightedSum);
  ASSERT_EQ(conv.affine.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> dense(5, 0.0);
    for (const Term& t : conv.affine.rows[i]) dense[t.source] += t.weight;
    for (std::size_t j = 0; j < 5; ++j) {
      const double expected = j == i ? 1.0 : (j == i + 1 ? -1.3 : 0.0);
      EXPECT_EQ(dense[j], expected);
    }
    EXPECT_EQ(conv.affine.bias[i], 0.2);
  }
}

TEST(Flatten, PairMaxConvolutionIsThreeByFourBand) {
  const Network net = NetworkBuilder(LayerShape{4}).convolution({1.0, -1.0}, 0.0).output({{1, 1, 1}}, {0}).build();
  const Network flat = flatten(net);
  const Layer& conv = flat.layer(1);
  ASSERT_EQ(conv.affine.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> dense(4, 0.0);
    for (const Term& t : conv.affine.rows[i]) dense[t.source] += t.weight;
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(dense[j], j == i ? 1.0 : (j == i + 1 ? -1.0 : 0.0));
  }
}

TEST(Flatten, AgreesWithStructuredEvaluation) {
  std::mt19937_64 rng(11);
  const Network toy = toyCnn();
  const Network flat1 = flatten(toy);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(5);
    for (double& v : x) v = std::uniform_real_distribution<double>(-3, 3)(rng);
    const auto a = evaluate(toy, x).output(), b = evaluate(flat1, x).output();
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-9);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Network net = testing::randomCnn(rng);
    const Network flat = flatten(net);
    std::vector<double> x(net.inputSize());
    for (double& v : x) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto a = evaluate(net, x).output(), b = evaluate(flat, x).output();
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-9);
  }
}

TEST(Flatten, NetworkWithoutConvolutionIsUnchanged) {
  const Network net = testing::cancellingNetwork();
  EXPECT_EQ(flatten(net), net);
}

TEST(NeuronCoordinates, RowMajor) {
  EXPECT_EQ(neuronCoordinates(LayerShape{13, 13, 1}, 0), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(neuronCoordinates(LayerShape{2, 3}, 4), (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(neuronCoordinates(LayerShape{4, 4, 2}, 31), (std::vector<std::size_t>{3, 3, 1}));
  EXPECT_THROW(neuronCoordinates(LayerShape{2, 3}, 6), StructuralError);
}

TEST(NeuronCoordinates, InverseOfFlatIndex) {
  const LayerShape shape{3, 4, 2};
  for (std::size_t i = 0; i < shape.size(); ++i) EXPECT_EQ(flatIndex(shape, neuronCoordinates(shape, i)), i);
}

TEST(LayerShape, RejectsEmptyOrZeroDims) {
  EXPECT_THROW(LayerShape(std::vector<std::size_t>{}), StructuralError);
  EXPECT_THROW((LayerShape{3, 0}), StructuralError);
}

TEST(Network, ValidatesStructure) {
  EXPECT_THROW(Network("bad", {Layer::input(LayerShape{2})}), StructuralError);
  EXPECT_THROW(NetworkBuilder(LayerShape{5}).maxPool(2).output({{1.0, 1.0}}, {0.0}).build(), StructuralError);
  EXPECT_THROW(NetworkBuilder(LayerShape{2}).convolution({1, 1, 1}, 0), StructuralError);
  EXPECT_THROW(NetworkBuilder(LayerShape{2}).weightedSum({{1, 1, 1}}, {0}).build(), StructuralError);
}

TEST(NeuronGraph, MatchesLayeredEvaluation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Network net = testing::randomCnn(rng);
    const NeuronGraph g = NeuronGraph::fromNetwork(net);
    EXPECT_EQ(g.size(), net.neuronCount());
    std::vector<double> x(net.inputSize());
    for (double& v : x) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Assignment a = evaluate(net, x);
    const std::vector<double> values = g.evaluate(x);
    for (NodeId id = 0; id < g.size(); ++id) {
      const NeuronRef& o = g.node(id).origin;
      EXPECT_NEAR(values[id], a.layers[o.layer][o.index], 1e-12);
    }
  }
}

TEST(NeuronGraph, LayerNodesFollowNeuronIndex) {
  const NeuronGraph g = NeuronGraph::fromNetwork(toyCnn());
  const auto pool = g.layerNodes(3);
  ASSERT_EQ(pool.size(), 2u);
  EXPECT_EQ(g.node(pool[0]).origin, (NeuronRef{3, 0}));
  EXPECT_EQ(g.node(pool[1]).origin, (NeuronRef{3, 1}));
  EXPECT_EQ(g.node(pool[1]).kind, NodeKind::Max);
}

}  // namespace
}  // namespace cnnabs
