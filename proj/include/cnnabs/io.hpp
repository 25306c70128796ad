#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnnabs/bounds.hpp"
#include "cnnabs/network.hpp"
#include "cnnabs/policies.hpp"
#include "cnnabs/query.hpp"

namespace cnnabs {

inline constexpr int kFormatVersion = 1;

// Shortest decimal string that parses back to exactly `v`.
std::string formatDouble(double v);

nlohmann::json networkToJson(const Network& net);
Network networkFromJson(const nlohmann::json& j);
Network loadNetwork(const std::filesystem::path& path);
void saveNetwork(const Network& net, const std::filesystem::path& path);

// Text format: "cnnabs-dataset 1", then "<count> <features>", then one
// "<label> <v_0> ... <v_{features-1}>" row per sample.
TestSet readDataset(std::istream& in);
void writeDataset(std::ostream& out, const TestSet& data);
TestSet loadDataset(const std::filesystem::path& path);
void saveDataset(const TestSet& data, const std::filesystem::path& path);

// Output atoms of a query file: {"terms": [[output, coef], ...],
// "relation": "<=" | ">=" | "=", "rhs": r}, canonicalised to "<= 0".
std::vector<OutputConstraint> outputConstraintsFromJson(const nlohmann::json& j);
nlohmann::json outputConstraintsToJson(const std::vector<OutputConstraint>& constraints);

struct QueryFile {
  std::shared_ptr<const Network> network;
  VerificationQuery query;
  std::optional<TestSet> dataset;
  // Sample the query was built around (adversarial queries).
  std::optional<std::vector<double>> x0;
  std::optional<Policy> policy;
};

// A general query ({"network", "input_bounds", "output_constraints"}) or the
// adversarial shorthand ({"adversarial": {"model", "dataset", "sample_index",
// "eps", "policy"}}). Paths are relative to the query file.
QueryFile loadQuery(const std::filesystem::path& path);
void saveQuery(const std::filesystem::path& path, const std::string& networkPath, const VerificationQuery& query,
               const std::optional<std::string>& datasetPath = {});

// One "node layer index lower upper" line per node.
void writeBoundsDump(std::ostream& out, const NeuronGraph& graph, const BoundsMap& bounds);

nlohmann::json readJsonFile(const std::filesystem::path& path);
void writeJsonFile(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace cnnabs
