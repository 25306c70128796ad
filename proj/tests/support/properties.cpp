#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cnnabs/abstraction.hpp"
#include "cnnabs/bounds.hpp"
#include "fixtures.hpp"

namespace cnnabs::testing {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double encodingOptimum(MaxRelaxation kind, const std::vector<Interval>& bounds, const LinearExpr& objective) {
  LpProblem lp;
  std::vector<VarId> a;
  for (const Interval& b : bounds) a.push_back(lp.addVariable(b.lower, b.upper));
  double hi = -kInfinity, lo = -kInfinity;
  for (const Interval& b : bounds) {
    hi = std::max(hi, b.upper);
    lo = std::max(lo, b.lower);
  }
  const VarId out = lp.addVariable(lo, hi);
  for (LpConstraint& c : encodeMaxRelaxation(kind, a, bounds, out)) lp.addConstraint(std::move(c));
  lp.setObjective(objective, Sense::Maximize);
  const LpOutcome o = solve(lp);
  if (o.status != LpStatus::Optimal) throw std::runtime_error("max relaxation LP not optimal");
  return o.optimum;
}

bool satisfies(MaxRelaxation kind, const std::vector<Interval>& bounds, const std::vector<double>& point) {
  std::vector<VarId> a(bounds.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = i;
  for (const LpConstraint& c : encodeMaxRelaxation(kind, a, bounds, bounds.size())) {
    const double r = c.residual(point);
    const bool ok = c.relation == Relation::LessEqual ? r <= 1e-6
                    : c.relation == Relation::GreaterEqual ? r >= -1e-6
                                                           : std::abs(r) <= 1e-6;
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TightnessTrial maxTightnessTrial(std::mt19937_64& rng, std::size_t samples) {
  TightnessTrial t;
  t.k = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
  std::vector<Interval> bounds;
  for (std::size_t i = 0; i < t.k; ++i) {
    const double l = uniform(rng, -5, 5);
    bounds.push_back({l, l + uniform(rng, 0.05, 6)});
  }
  LinearExpr objective;
  std::vector<double> w(t.k + 1);
  for (double& c : w) c = uniform(rng, -1, 1);
  for (std::size_t i = 0; i <= t.k; ++i) objective.add(i, w[i]);

  t.newOptimum = encodingOptimum(MaxRelaxation::New, bounds, objective);
  t.sotaOptimum = encodingOptimum(MaxRelaxation::Sota, bounds, objective);

  auto value = [&](std::vector<double> a) {
    a.push_back(*std::max_element(a.begin(), a.end()));
    return std::make_pair(objective.evaluate(a), a);
  };
  t.sampledMaximum = -kInfinity;
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> a;
    for (const Interval& b : bounds) a.push_back(uniform(rng, b.lower, b.upper));
    t.sampledMaximum = std::max(t.sampledMaximum, value(a).first);
  }
  for (std::size_t mask = 0; mask < (std::size_t{1} << t.k); ++mask) {
    std::vector<double> a;
    for (std::size_t i = 0; i < t.k; ++i) a.push_back(mask >> i & 1 ? bounds[i].upper : bounds[i].lower);
    const auto [v, point] = value(a);
    t.sampledMaximum = std::max(t.sampledMaximum, v);
    if (!satisfies(MaxRelaxation::New, bounds, point) || !satisfies(MaxRelaxation::Sota, bounds, point)) {
      t.verticesInside = false;
    }
  }
  return t;
}

ContainmentTrial containmentTrial(std::mt19937_64& rng, std::size_t points) {
  ContainmentTrial t;
  const Network net = randomCnn(rng);
  auto graph = std::make_shared<const NeuronGraph>(NeuronGraph::fromNetwork(net));
  std::vector<Interval> box;
  for (std::size_t i = 0; i < net.inputSize(); ++i) {
    const double c = uniform(rng, -1, 1), r = uniform(rng, 0, 1);
    box.push_back({c - r, c + r});
  }
  const BoundsMap bounds = intervalPass(*graph, box);
  const std::size_t layer = std::uniform_int_distribution<std::size_t>(1, net.layerCount() - 2)(rng);
  std::set<NodeId> V;
  for (NodeId id : graph->layerNodes(layer)) {
    if (rng() % 2) V.insert(id);
  }
  const AbstractionState s = abstract(graph, bounds, layer, V);

  // Pruned-set check by forward reachability from each node.
  std::vector<bool> reaches(graph->size(), false);
  for (NodeId out : graph->outputs()) reaches[out] = true;
  for (NodeId id = graph->size(); id-- > 0;) {
    if (!reaches[id]) continue;
    if (V.contains(id)) continue;
    const Node& n = graph->node(id);
    for (const Term& tm : n.terms) reaches[tm.source] = true;
    for (NodeId src : n.sources) reaches[src] = true;
  }
  for (NodeId id = 0; id < graph->size(); ++id) {
    if (graph->node(id).kind == NodeKind::Input || V.contains(id)) continue;
    if (s.pruned.contains(id) == reaches[id]) t.prunedSetCorrect = false;
  }

  for (std::size_t p = 0; p < points; ++p) {
    const std::vector<double> x = samplePoint(box, rng);
    const std::vector<double> values = graph->evaluate(x);
    std::vector<double> abstractInput = x;
    bool inside = true;
    std::size_t i = 0;
    for (NodeId v : V) {
      abstractInput.push_back(values[v]);
      inside = inside && s.promotedBounds[i++].contains(values[v], 1e-9);
    }
    const auto original = graph->outputValues(values);
    const auto abstracted = s.graph->outputValues(s.graph->evaluate(abstractInput));
    bool same = original.size() == abstracted.size();
    for (std::size_t j = 0; same && j < original.size(); ++j) same = std::abs(original[j] - abstracted[j]) <= 1e-9;
    ++t.checks;
    if (!inside || !same) ++t.violations;
  }
  return t;
}

}  // namespace cnnabs::testing
