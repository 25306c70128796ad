#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnnabs/bounds.hpp"
#include "cnnabs/cegar.hpp"
#include "cnnabs/io.hpp"
#include "cnnabs/policies.hpp"

namespace cnnabs {

// Process exit codes of the solve commands.
inline constexpr int kExitUnsat = 0;
inline constexpr int kExitSat = 1;
inline constexpr int kExitTimeout = 2;
inline constexpr int kExitError = 3;

int exitCodeFor(VerdictStatus status);

struct SolveOptions {
  std::optional<Policy> policy;  // query file's policy, else singleclass
  MaxRelaxation relaxation = MaxRelaxation::New;
  std::size_t step = 1;
  bool geometricSteps = false;
  double timeoutSeconds = 3600.0;
  double subTimeoutSeconds = 800.0;
  std::uint64_t seed = 0;
  bool noAbstraction = false;
  // Stop after bound propagation: Unsat if the relaxation is infeasible,
  // otherwise Timeout (undecided).
  bool boundsOnly = false;
  bool noTighten = false;
  std::optional<std::size_t> layer;
  std::optional<std::filesystem::path> results;
};

CegarConfig cegarConfig(const QueryFile& query, const SolveOptions& options);

// Runs one query in the mode selected by the options.
CegarRun runQuery(const QueryFile& query, const SolveOptions& options);

// Results file contents: the iteration report plus the run's settings.
nlohmann::json resultsJson(const CegarRun& run, const std::string& source, const SolveOptions& options);

int cmdSolve(const std::filesystem::path& queryPath, const SolveOptions& options, std::ostream& out);
int cmdSolveAdversarial(const std::filesystem::path& modelPath, const std::filesystem::path& datasetPath,
                        std::size_t sampleIndex, double eps, const SolveOptions& options, std::ostream& out);

struct PropagateOptions {
  MaxRelaxation relaxation = MaxRelaxation::New;
  bool intervalOnly = false;
  std::optional<std::filesystem::path> dump;
};

struct PropagateResult {
  bool infeasible = false;
  BoundsMap bounds;
};

PropagateResult propagateBounds(const VerificationQuery& query, const PropagateOptions& options);
// Prints the bounds of every output, or "infeasible" when the relaxation
// already refutes the query, and writes the full dump when requested.
int cmdPropagateBounds(const std::filesystem::path& queryPath, const PropagateOptions& options, std::ostream& out);

struct BenchItem {
  std::string name;
  QueryFile query;
};

// Runs every item in vanilla (no abstraction) and abstraction mode and
// aggregates verdicts, solve statuses and runtimes per mode.
nlohmann::json runBench(const std::vector<BenchItem>& items, const SolveOptions& options);

// Manifest: {"format_version": 1, "queries": [paths relative to the manifest]}.
int cmdBench(const std::filesystem::path& manifestPath, const SolveOptions& options,
             const std::optional<std::filesystem::path>& reportPath, std::ostream& out);

// Cactus plot of a bench report: solved queries against cumulative runtime.
std::string cactusSvg(const nlohmann::json& report);
int cmdPlot(const std::filesystem::path& reportPath, const std::filesystem::path& svgPath, std::ostream& out);

}  // namespace cnnabs
