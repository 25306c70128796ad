#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "cnnabs/graph.hpp"
#include "cnnabs/network.hpp"
#include "cnnabs/query.hpp"

namespace cnnabs::testing {

// Toy CNN: conv (1, -1.3) + 0.2, ReLU, max-pool 2,
// a two-neuron weighted sum and four outputs. Layers: 0 input, 1 conv,
// 2 relu, 3 maxpool, 4 ws, 5 output.
Network toyCnn();
// Box property: x0, x2 in [0.5, 1]; x1, x3, x4 in [0, 0.5]; Q = {y1 - y0 <= 0}.
VerificationQuery toyBoxQuery();

// x -> h0 -> h1 -> y with a skip edge x -> y of weight -1 (h0 = h1 = x, y = 0).
// Node origins: x (0,0), h0 (1,0), h1 (2,0), y (3,0).
std::shared_ptr<const NeuronGraph> cancellingGraph();
// Q = (y >= threshold) and P = (-1 <= x <= 1).
VerificationQuery cancellingQuery(double threshold);
// Layered equivalent with pass-through neurons: [h0, p0] = [x, x],
// [h1, p1] = [h0, p0], y = h1 - p1.
Network cancellingNetwork();

// c_i = x_i - x_{i+1}, m0 = max(c0, c1), m1 = max(c1, c2), y = m0 + m1.
std::shared_ptr<const NeuronGraph> pairMaxGraph();
// Box x0, x1 in [-1, 1], x2, x3 in [-2, 2], no output constraints.
VerificationQuery pairMaxQuery();
// Layered form: the lowered conv emits (c0, c1, c1, c2) so that a
// non-overlapping max-pool yields m0, m1.
Network pairMaxNetwork();

struct RandomNetSpec {
  std::size_t maxNeurons = 40;
  std::size_t maxPlConstraints = 8;
};

// Small random CNN: conv (kernel or lowered), optional relu, optional
// max-pool, optional ws + relu, output with 2 or 3 neurons.
Network randomCnn(std::mt19937_64& rng, const RandomNetSpec& spec = {});

// Random box inside [-1, 1]^n and one or two random output constraints whose
// thresholds are chosen near the output range at the box center, so both
// verdicts occur.
VerificationQuery randomQuery(const Network& net, std::mt19937_64& rng);

std::size_t plConstraintCount(const NeuronGraph& graph);

// Uniform point in a box.
std::vector<double> samplePoint(std::span<const Interval> box, std::mt19937_64& rng);

}  // namespace cnnabs::testing
