#include "cnnabs/verifier.hpp"

#include <algorithm>
#include <cmath>

#include "cnnabs/log.hpp"

namespace cnnabs {

bool phaseFixedByBounds(const NeuronGraph& graph, NodeId id, const BoundsMap& bounds) {
  const Node& n = graph.node(id);
  if (n.kind == NodeKind::Relu) {
    const Interval& a = bounds[n.sources[0]];
    return a.upper <= 0 || a.lower >= 0;
  }
  if (n.kind == NodeKind::Max) {
    if (n.sources.size() == 1) return true;
    std::vector<Interval> in;
    for (NodeId s : n.sources) in.push_back(bounds[s]);
    return summarizeMax(in).trivial();
  }
  return true;
}

double plViolation(const NeuronGraph& graph, NodeId id, std::span<const double> point) {
  const Node& n = graph.node(id);
  if (n.kind == NodeKind::Relu) return std::abs(point[id] - std::max(0.0, point[n.sources[0]]));
  if (n.kind == NodeKind::Max) {
    double m = -kInfinity;
    for (NodeId s : n.sources) m = std::max(m, point[s]);
    return std::abs(point[id] - m);
  }
  return 0.0;
}

namespace {

bool isOpen(const NeuronGraph& graph, std::span<const int> phases, const BoundsMap& bounds, NodeId id) {
  const NodeKind kind = graph.node(id).kind;
  if (kind != NodeKind::Relu && kind != NodeKind::Max) return false;
  return phases[id] == kOpenPhase && !phaseFixedByBounds(graph, id, bounds);
}

// Phases of `id` to explore, the one matching the LP point first.
std::vector<int> childPhases(const NeuronGraph& graph, NodeId id, const BoundsMap& bounds,
                             std::span<const double> point) {
  const Node& n = graph.node(id);
  if (n.kind == NodeKind::Relu) {
    return point[n.sources[0]] >= 0 ? std::vector<int>{1, 0} : std::vector<int>{0, 1};
  }
  double lMax = -kInfinity;
  for (NodeId s : n.sources) lMax = std::max(lMax, bounds[s].lower);
  std::size_t best = 0;
  for (std::size_t j = 1; j < n.sources.size(); ++j) {
    if (point[n.sources[j]] > point[n.sources[best]]) best = j;
  }
  std::vector<int> phases{static_cast<int>(best)};
  for (std::size_t j = 0; j < n.sources.size(); ++j) {
    // An input whose upper bound is below another's lower bound never wins.
    if (j != best && bounds[n.sources[j]].upper >= lMax) phases.push_back(static_cast<int>(j));
  }
  return phases;
}

}  // namespace

std::optional<NodeId> splitHeuristic(const NeuronGraph& graph, std::span<const int> phases, const BoundsMap& bounds,
                                     std::span<const double> point, double tolerance) {
  std::optional<NodeId> best;
  double bestViolation = tolerance;
  for (NodeId id = 0; id < graph.size(); ++id) {
    if (!isOpen(graph, phases, bounds, id)) continue;
    const double v = plViolation(graph, id, point);
    if (v > bestViolation) {
      bestViolation = v;
      best = id;
    }
  }
  return best;
}

Verdict verify(const VerificationQuery& query, Deadline deadline, const VerifyOptions& options) {
  const auto start = Clock::now();
  query.validate();
  const NeuronGraph& graph = *query.network;
  BoundsMap bounds = options.bounds ? *options.bounds : intervalPass(graph, query.inputBox);
  if (bounds.size() != graph.size()) throw StructuralError("verifier bounds do not match the network");

  VerdictStats stats;
  auto finish = [&](Verdict v) {
    stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    v.stats = stats;
    return v;
  };

  for (NodeId id = 0; id < graph.size(); ++id) {
    Interval& b = bounds[id];
    if (b.lower > b.upper) {
      if (b.lower - b.upper > options.tolerance) return finish(Verdict::unsat());
      b.lower = b.upper = 0.5 * (b.lower + b.upper);
    }
  }

  std::vector<PhaseAssignment> stack{PhaseAssignment(graph.size(), kOpenPhase)};
  while (!stack.empty()) {
    if (Clock::now() >= deadline) return finish(Verdict::timeout());
    const PhaseAssignment phases = std::move(stack.back());
    stack.pop_back();
    ++stats.searchNodes;

    const LpProblem lp = encodeQueryRelaxation(graph, bounds, query.outputConstraints, options.relaxation, phases);
    ++stats.lpSolves;
    const LpOutcome outcome = solve(lp);
    if (outcome.status != LpStatus::Optimal) continue;

    std::vector<double> x;
    x.reserve(graph.inputCount());
    for (std::size_t i = 0; i < graph.inputCount(); ++i) {
      x.push_back(std::clamp(outcome.point[graph.inputs()[i]], query.inputBox[i].lower, query.inputBox[i].upper));
    }
    if (checkConcrete(query, x, options.tolerance)) return finish(Verdict::sat(std::move(x)));

    std::optional<NodeId> split = splitHeuristic(graph, phases, bounds, outcome.point, options.tolerance);
    if (!split) {
      for (NodeId id = 0; id < graph.size(); ++id) {
        if (isOpen(graph, phases, bounds, id)) {
          split = id;
          break;
        }
      }
    }
    if (!split) {
      // Every phase is fixed, so the LP is exact, yet the concrete check failed.
      stats.nearTolerance = true;
      log::debug("discarding a leaf that satisfies the query only within LP tolerance");
      continue;
    }
    const std::vector<int> children = childPhases(graph, *split, bounds, outcome.point);
    for (auto it = children.rbegin(); it != children.rend(); ++it) {
      PhaseAssignment child = phases;
      child[*split] = *it;
      stack.push_back(std::move(child));
    }
  }
  return finish(Verdict::unsat());
}

}  // namespace cnnabs
