#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cnnabs/bounds.hpp"
#include "cnnabs/graph.hpp"
#include "cnnabs/query.hpp"

namespace cnnabs {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

inline Deadline deadlineAfter(double seconds) {
  if (seconds >= 1e9) return Deadline::max();
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

struct VerifyOptions {
  MaxRelaxation relaxation = MaxRelaxation::New;
  // Root node bounds; an interval pass over the query box when absent.
  std::optional<BoundsMap> bounds;
  double tolerance = 1e-6;
};

// Complete branch-and-bound search over Relu/Max phases. Sat verdicts carry a
// counterexample accepted by checkConcrete.
Verdict verify(const VerificationQuery& query, Deadline deadline, const VerifyOptions& options = {});

// True when the bounds of the node's inputs already force one linear phase.
bool phaseFixedByBounds(const NeuronGraph& graph, NodeId id, const BoundsMap& bounds);

// |b - f(a)| for a Relu/Max node at the given assignment; 0 for other nodes.
double plViolation(const NeuronGraph& graph, NodeId id, std::span<const double> point);

// Open (unfixed, not fixed by bounds) Relu/Max node with the largest
// violation at `point` above `tolerance`, ties to the lowest id.
std::optional<NodeId> splitHeuristic(const NeuronGraph& graph, std::span<const int> phases, const BoundsMap& bounds,
                                     std::span<const double> point, double tolerance = 1e-6);

// Swappable verification engine.
class VerifierBackend {
 public:
  virtual ~VerifierBackend() = default;
  virtual std::string_view name() const = 0;
  virtual Verdict verify(const VerificationQuery& query, Deadline deadline, const VerifyOptions& options) = 0;
};

class BranchAndBoundBackend final : public VerifierBackend {
 public:
  std::string_view name() const override { return "bab"; }
  Verdict verify(const VerificationQuery& query, Deadline deadline, const VerifyOptions& options) override {
    return cnnabs::verify(query, deadline, options);
  }
};

}  // namespace cnnabs
