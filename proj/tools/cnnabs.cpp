// cnnabs: verify properties of convolutional networks by abstraction-refinement.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cnnabs/commands.hpp"

namespace {

void addSolveFlags(CLI::App* cmd, cnnabs::SolveOptions& o, std::string& policy, std::string& relaxation,
                   std::string& results, std::size_t& layer) {
  cmd->add_option("--policy", policy, "refinement policy")
      ->check(CLI::IsMember({"centered", "allsamples", "samplerank", "singleclass", "majorityclassvote", "random"}));
  cmd->add_option("--relaxation", relaxation, "max relaxation used for bound tightening")
      ->check(CLI::IsMember({"new", "sota", "planet", "deeppoly", "cnncert"}));
  cmd->add_option("--step", o.step, "neurons restored per refinement")->check(CLI::PositiveNumber);
  cmd->add_flag("--geometric-steps", o.geometricSteps, "double the refinement step after every refinement");
  cmd->add_option("--timeout", o.timeoutSeconds, "global timeout in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--sub-timeout", o.subTimeoutSeconds, "timeout per abstract query in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed of the random policy");
  cmd->add_flag("--no-abstraction", o.noAbstraction, "verify the full network directly");
  cmd->add_flag("--bounds-only", o.boundsOnly, "decide with bound propagation alone");
  cmd->add_flag("--no-tighten", o.noTighten, "skip LP bound tightening, use interval bounds");
  cmd->add_option("--layer", layer, "abstraction layer index (default: deepest conv/maxpool)");
  cmd->add_option("--results", results, "write a JSON results file");
}

void finishOptions(cnnabs::SolveOptions& o, const std::string& policy, const std::string& relaxation,
                   const std::string& results, std::size_t layer) {
  if (!policy.empty()) o.policy = cnnabs::parsePolicy(policy);
  o.relaxation = cnnabs::parseMaxRelaxation(relaxation);
  if (!results.empty()) o.results = results;
  if (layer != 0) o.layer = layer;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abstraction-refinement verifier for convolutional neural networks"};
  app.require_subcommand(1);

  cnnabs::SolveOptions solveOpts;
  std::string policy, relaxation = "new", results;
  std::size_t layer = 0;

  std::string queryPath;
  auto* solve = app.add_subcommand("solve", "verify a query file");
  solve->add_option("query", queryPath, "query file")->required();
  addSolveFlags(solve, solveOpts, policy, relaxation, results, layer);

  std::string modelPath, datasetPath;
  std::size_t sampleIndex = 0;
  double eps = 0.0;
  auto* adv = app.add_subcommand("solve-adversarial", "verify targeted robustness around a dataset sample");
  adv->add_option("model", modelPath, "network file")->required();
  adv->add_option("--dataset", datasetPath, "dataset file")->required();
  adv->add_option("--sample", sampleIndex, "sample index")->required();
  adv->add_option("--eps", eps, "l-infinity radius")->required()->check(CLI::NonNegativeNumber);
  addSolveFlags(adv, solveOpts, policy, relaxation, results, layer);

  cnnabs::PropagateOptions propOpts;
  std::string propRelaxation = "new", dumpPath;
  auto* prop = app.add_subcommand("propagate-bounds", "compute neuron bounds for a query");
  prop->add_option("query", queryPath, "query file")->required();
  prop->add_option("--relaxation", propRelaxation, "max relaxation")
      ->check(CLI::IsMember({"new", "sota", "planet", "deeppoly", "cnncert"}));
  prop->add_flag("--interval-only", propOpts.intervalOnly, "skip LP tightening");
  prop->add_option("--dump", dumpPath, "write every node's bounds to this file");

  std::string manifestPath, reportPath;
  auto* bench = app.add_subcommand("bench", "run a manifest of queries with and without abstraction");
  bench->add_option("manifest", manifestPath, "manifest file")->required();
  bench->add_option("--report", reportPath, "write the JSON report here");
  addSolveFlags(bench, solveOpts, policy, relaxation, results, layer);

  std::string svgPath;
  auto* plot = app.add_subcommand("plot", "render a bench report as an SVG cactus plot");
  plot->add_option("report", reportPath, "bench report")->required();
  plot->add_option("-o,--output", svgPath, "SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cnnabs::kExitError;
  }

  try {
    if (*solve) {
      finishOptions(solveOpts, policy, relaxation, results, layer);
      return cnnabs::cmdSolve(queryPath, solveOpts, std::cout);
    }
    if (*adv) {
      finishOptions(solveOpts, policy, relaxation, results, layer);
      return cnnabs::cmdSolveAdversarial(modelPath, datasetPath, sampleIndex, eps, solveOpts, std::cout);
    }
    if (*prop) {
      propOpts.relaxation = cnnabs::parseMaxRelaxation(propRelaxation);
      if (!dumpPath.empty()) propOpts.dump = dumpPath;
      return cnnabs::cmdPropagateBounds(queryPath, propOpts, std::cout);
    }
    if (*bench) {
      finishOptions(solveOpts, policy, relaxation, results, layer);
      std::optional<std::filesystem::path> report;
      if (!reportPath.empty()) report = reportPath;
      return cnnabs::cmdBench(manifestPath, solveOpts, report, std::cout);
    }
    if (*plot) return cnnabs::cmdPlot(reportPath, svgPath, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cnnabs::kExitError;
  }
  return cnnabs::kExitError;
}
