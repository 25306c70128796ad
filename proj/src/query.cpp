#include "cnnabs/query.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cnnabs {

double OutputConstraint::evaluate(std::span<const double> outputs) const {
  double v = constant;
  for (const Term& t : terms) v += t.weight * outputs[t.source];
  return v;
}

void VerificationQuery::validate() const {
  if (!network) throw StructuralError("query has no network");
  if (inputBox.size() != network->inputCount()) {
    throw StructuralError("query box has " + std::to_string(inputBox.size()) + " entries, network has " +
                          std::to_string(network->inputCount()) + " inputs");
  }
  for (const Interval& b : inputBox) {
    if (!(b.lower <= b.upper) || !std::isfinite(b.lower) || !std::isfinite(b.upper)) {
      throw StructuralError("input bounds must be finite with lower <= upper");
    }
  }
  for (const OutputConstraint& c : outputConstraints) {
    for (const Term& t : c.terms) {
      if (t.source >= network->outputCount()) {
        throw StructuralError("output constraint references output " + std::to_string(t.source));
      }
    }
  }
}

std::string_view toString(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Sat:
      return "sat";
    case VerdictStatus::Unsat:
      return "unsat";
    case VerdictStatus::Timeout:
      return "timeout";
  }
  return "unknown";
}

std::string_view toString(SolveStatus s) {
  switch (s) {
    case SolveStatus::LpInfeasible:
      return "lp_infeasible";
    case SolveStatus::AllAbstract:
      return "all_abstract";
    case SolveStatus::PartialRefinement:
      return "partial_refinement";
    case SolveStatus::FullNetwork:
      return "full_network";
  }
  return "unknown";
}

std::pair<std::size_t, std::size_t> topTwo(std::span<const double> outputs) {
  if (outputs.size() < 2) throw StructuralError("need at least two outputs to pick a runner-up label");
  std::size_t best = 0;
  for (std::size_t j = 1; j < outputs.size(); ++j) {
    if (outputs[j] > outputs[best]) best = j;
  }
  std::size_t second = best == 0 ? 1 : 0;
  for (std::size_t j = 0; j < outputs.size(); ++j) {
    if (j != best && outputs[j] > outputs[second]) second = j;
  }
  return {best, second};
}

VerificationQuery buildAdversarial(const Network& net, std::span<const double> x0, double eps, InputDomain domain) {
  if (eps < 0) throw StructuralError("perturbation radius must be non-negative");
  if (x0.size() != net.inputSize()) throw StructuralError("sample size does not match network input size");
  if (net.outputSize() < 2) throw StructuralError("adversarial queries need a network with at least two outputs");

  const auto [label, runnerUp] = topTwo(evaluate(net, x0).output());

  VerificationQuery q;
  q.network = std::make_shared<const NeuronGraph>(NeuronGraph::fromNetwork(net));
  q.inputBox.reserve(x0.size());
  for (double v : x0) {
    const double lo = std::max(domain.lower, v - eps);
    const double hi = std::min(domain.upper, v + eps);
    // A sample outside the domain keeps its own value.
    q.inputBox.push_back(lo <= hi ? Interval{lo, hi} : Interval{v, v});
  }
  OutputConstraint c;
  c.terms = {{label, 1.0}, {runnerUp, -1.0}};
  q.outputConstraints.push_back(std::move(c));
  return q;
}

bool checkConcrete(const VerificationQuery& query, std::span<const double> x, double tolerance) {
  if (x.size() != query.inputBox.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!query.inputBox[i].contains(x[i], 1e-9)) return false;
  }
  const std::vector<double> values = query.network->evaluate(x);
  const std::vector<double> outputs = query.network->outputValues(values);
  return std::all_of(query.outputConstraints.begin(), query.outputConstraints.end(),
                     [&](const OutputConstraint& c) { return c.evaluate(outputs) <= tolerance; });
}

}  // namespace cnnabs
