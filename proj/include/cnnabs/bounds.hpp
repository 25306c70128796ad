#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cnnabs/graph.hpp"
#include "cnnabs/lp.hpp"
#include "cnnabs/query.hpp"

namespace cnnabs {

// Lower/upper bound of every node of a NeuronGraph.
class BoundsMap {
 public:
  BoundsMap() = default;
  explicit BoundsMap(std::size_t size, Interval initial = {-kInfinity, kInfinity}) : bounds_(size, initial) {}

  std::size_t size() const { return bounds_.size(); }
  Interval& operator[](NodeId id) { return bounds_.at(id); }
  const Interval& operator[](NodeId id) const { return bounds_.at(id); }
  const std::vector<Interval>& all() const { return bounds_; }

  bool operator==(const BoundsMap&) const = default;

 private:
  std::vector<Interval> bounds_;
};

// Forward interval arithmetic from a box over the graph inputs.
BoundsMap intervalPass(const NeuronGraph& graph, std::span<const Interval> inputBox);

// Standard triangle relaxation of b = ReLU(a), or the exact linear phase when
// the bounds of a fix it.
std::vector<LpConstraint> encodeReluRelaxation(VarId a, VarId b, Interval aBounds);

// Derived scalars of b = max(a_0..a_{k-1}) used by the max relaxations.
struct MaxBoundSummary {
  double uFirst = 0.0;   // largest upper bound
  double uSecond = 0.0;  // largest upper bound among the other inputs
  double lMax = 0.0;     // largest lower bound
  double uMin = 0.0;     // smallest upper bound that is >= lMax
  std::size_t first = 0;
  std::size_t second = 0;

  // One input dominates every other: b = a_first exactly.
  bool trivial() const { return uSecond < lMax; }
};

MaxBoundSummary summarizeMax(std::span<const Interval> inputBounds);

enum class MaxRelaxation { New, Sota, Planet, DeepPoly, CnnCert };

std::string_view toString(MaxRelaxation r);
MaxRelaxation parseMaxRelaxation(std::string_view name);

std::vector<LpConstraint> encodeMaxRelaxation(MaxRelaxation kind, std::span<const VarId> inputs,
                                              std::span<const Interval> inputBounds, VarId out);

// Lower bounds b >= a_j, the two lambda in {lMax, uMin} upper faces and the
// uFirst face.
inline std::vector<LpConstraint> encodeMaxRelaxationNew(std::span<const VarId> inputs,
                                                        std::span<const Interval> inputBounds, VarId out) {
  return encodeMaxRelaxation(MaxRelaxation::New, inputs, inputBounds, out);
}

// Intersection of the Planet, DeepPoly and CNN-Cert upper bounds with b >= a_j.
inline std::vector<LpConstraint> encodeMaxRelaxationSota(std::span<const VarId> inputs,
                                                         std::span<const Interval> inputBounds, VarId out) {
  return encodeMaxRelaxation(MaxRelaxation::Sota, inputs, inputBounds, out);
}

// Per-node phase decision: -1 open; Relu 0 = inactive, 1 = active; Max = the
// position in the node's source list of the input that attains the max.
using PhaseAssignment = std::vector<int>;
inline constexpr int kOpenPhase = -1;

// LP relaxation of a whole query: one variable per node (VarId == NodeId)
// bounded by `bounds`, affine nodes exact, Relu/Max relaxed (or fixed to the
// phase given in `phases`), plus the output constraints.
LpProblem encodeQueryRelaxation(const NeuronGraph& graph, const BoundsMap& bounds,
                                std::span<const OutputConstraint> outputConstraints, MaxRelaxation relaxation,
                                std::span<const int> phases = {});

struct TightenResult {
  bool infeasible = false;
  BoundsMap bounds;
  std::size_t lpSolves = 0;
  std::size_t solverFailures = 0;
};

// Shrinks every non-input node's bounds by maximizing and minimizing it over
// the LP relaxation, in topological order. Never widens a bound. Reports
// infeasible when the relaxation has no solution, which proves the query UNSAT.
TightenResult lpTighten(const VerificationQuery& query, const BoundsMap& initial, MaxRelaxation relaxation);

}  // namespace cnnabs
