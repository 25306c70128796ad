#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cnnabs/graph.hpp"
#include "cnnabs/network.hpp"

namespace cnnabs {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  bool contains(double v, double tolerance = 0.0) const {
    return v >= lower - tolerance && v <= upper + tolerance;
  }
  bool operator==(const Interval&) const = default;
};

// Canonical output atom: sum_j terms[j].weight * y[terms[j].source] + constant <= 0,
// where `source` indexes the network outputs.
struct OutputConstraint {
  std::vector<Term> terms;
  double constant = 0.0;

  double evaluate(std::span<const double> outputs) const;
};

// <P, N, Q>: box constraints on every network input (covering both the
// original input constraints and the bounds of promoted abstract neurons)
// and a conjunction of linear constraints on the outputs describing the
// undesired behavior.
struct VerificationQuery {
  std::shared_ptr<const NeuronGraph> network;
  std::vector<Interval> inputBox;
  std::vector<OutputConstraint> outputConstraints;

  // Throws StructuralError if sizes or boxes are inconsistent.
  void validate() const;
};

enum class VerdictStatus { Sat, Unsat, Timeout };

// Where in the refinement process a query was settled.
enum class SolveStatus { LpInfeasible, AllAbstract, PartialRefinement, FullNetwork };

std::string_view toString(VerdictStatus s);
std::string_view toString(SolveStatus s);

struct VerdictStats {
  double seconds = 0.0;
  std::size_t refinements = 0;
  double sizeRatio = 1.0;
  std::size_t searchNodes = 0;
  std::size_t lpSolves = 0;
  // A leaf was discarded whose LP point met every constraint within the
  // solver tolerance but failed the concrete check.
  bool nearTolerance = false;
};

struct Verdict {
  VerdictStatus status = VerdictStatus::Timeout;
  std::optional<std::vector<double>> counterexample;
  std::optional<SolveStatus> solveStatus;
  VerdictStats stats;

  static Verdict sat(std::vector<double> cex) {
    Verdict v;
    v.status = VerdictStatus::Sat;
    v.counterexample = std::move(cex);
    return v;
  }
  static Verdict unsat() {
    Verdict v;
    v.status = VerdictStatus::Unsat;
    return v;
  }
  static Verdict timeout() { return {}; }
};

struct InputDomain {
  double lower = 0.0;
  double upper = 1.0;
};

// Index of the largest output and of the runner-up; ties go to the lower index.
std::pair<std::size_t, std::size_t> topTwo(std::span<const double> outputs);

// Targeted robustness query: the l-infinity ball of radius eps around x0
// (clipped to the domain) and Q = { y[j0] - y[j0s] <= 0 }.
VerificationQuery buildAdversarial(const Network& net, std::span<const double> x0, double eps,
                                   InputDomain domain = {});

// True iff x lies in the input box and the network output at x satisfies
// every output constraint within `tolerance`.
bool checkConcrete(const VerificationQuery& query, std::span<const double> x, double tolerance = 1e-6);

}  // namespace cnnabs
