#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnnabs/abstraction.hpp"
#include "cnnabs/bounds.hpp"
#include "cnnabs/network.hpp"
#include "cnnabs/policies.hpp"
#include "cnnabs/query.hpp"
#include "cnnabs/verifier.hpp"

namespace cnnabs {

struct CegarConfig {
  MaxRelaxation relaxation = MaxRelaxation::New;
  Policy policy = Policy::SingleClass;
  std::uint64_t seed = 0;
  // Neurons restored per refinement; doubled after each refinement when
  // geometricSteps is set.
  std::size_t step = 1;
  bool geometricSteps = false;
  double timeoutSeconds = 3600.0;
  double subTimeoutSeconds = 800.0;
  // LP tightening of the interval bounds before abstraction.
  bool tightenBounds = true;
  // Overrides selectAbstractionLayer.
  std::optional<std::size_t> abstractionLayer;
  const TestSet* testSet = nullptr;
  // Reference point for SampleRank and SingleClass; the box center by default.
  std::optional<std::vector<double>> x0;
};

struct IterationRow {
  std::size_t iteration = 0;
  std::size_t abstractCount = 0;
  std::size_t prunedCount = 0;
  double sizeRatio = 1.0;
  VerdictStatus subVerdict = VerdictStatus::Timeout;
  // The abstract counterexample failed on the original network.
  bool spurious = false;
  double seconds = 0.0;
};

struct CegarRun {
  Verdict verdict;
  std::vector<IterationRow> rows;
  std::optional<std::size_t> abstractionLayer;
};

// Abstraction-refinement over the convolutional prefix of `net`. The query's
// network must be the neuron graph of `net`.
CegarRun solveWithAbstraction(const Network& net, const VerificationQuery& query, const CegarConfig& config = {});

// The same loop at graph level: abstracts the nodes of `layer`, refining by
// `scores` (one per layer node, empty = index order).
CegarRun runAbstractionLoop(const VerificationQuery& query, std::size_t layer, const std::vector<double>& scores,
                            const CegarConfig& config = {});

// Bound propagation followed by a direct search on the full network.
CegarRun solveDirect(const VerificationQuery& query, const CegarConfig& config = {});

// Per-iteration rows and the final verdict with its solve status.
nlohmann::json iterationReport(const CegarRun& run);

}  // namespace cnnabs
