#include "cnnabs/cegar.hpp"

#include <algorithm>

#include "cnnabs/log.hpp"

namespace cnnabs {

namespace {

double secondsSince(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Prepared {
  BoundsMap bounds;
  std::size_t lpSolves = 0;
  bool infeasible = false;
};

Prepared prepareBounds(const VerificationQuery& query, const CegarConfig& config) {
  Prepared p;
  p.bounds = intervalPass(*query.network, query.inputBox);
  if (!config.tightenBounds) return p;
  TightenResult t = lpTighten(query, p.bounds, config.relaxation);
  p.lpSolves = t.lpSolves;
  p.infeasible = t.infeasible;
  p.bounds = std::move(t.bounds);
  return p;
}

void accumulate(VerdictStats& total, const VerdictStats& part) {
  total.searchNodes += part.searchNodes;
  total.lpSolves += part.lpSolves;
  total.nearTolerance = total.nearTolerance || part.nearTolerance;
}

CegarRun lpInfeasibleRun(Clock::time_point start, std::size_t lpSolves) {
  CegarRun run;
  run.verdict = Verdict::unsat();
  run.verdict.solveStatus = SolveStatus::LpInfeasible;
  run.verdict.stats.lpSolves = lpSolves;
  run.verdict.stats.seconds = secondsSince(start);
  return run;
}

SolveStatus statusFor(std::size_t abstractCount, std::size_t layerSize) {
  if (abstractCount == 0) return SolveStatus::FullNetwork;
  return abstractCount == layerSize ? SolveStatus::AllAbstract : SolveStatus::PartialRefinement;
}

std::vector<double> boxCenter(const VerificationQuery& q) {
  std::vector<double> c;
  for (const Interval& b : q.inputBox) c.push_back(0.5 * (b.lower + b.upper));
  return c;
}

CegarRun loop(const VerificationQuery& query, std::size_t layer, const std::vector<double>& scores,
              const CegarConfig& config, const Prepared& prepared, Clock::time_point start) {
  const Deadline global = start + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(std::min(config.timeoutSeconds, 1e9)));
  CegarRun run;
  run.abstractionLayer = layer;
  VerdictStats total;
  total.lpSolves = prepared.lpSolves;

  const std::vector<NodeId> layerNodes = query.network->layerNodes(layer);
  AbstractionState state = abstract(query.network, prepared.bounds, layer,
                                    std::set<NodeId>(layerNodes.begin(), layerNodes.end()), scores);
  std::size_t step = std::max<std::size_t>(config.step, 1);

  auto finish = [&](Verdict v, std::optional<SolveStatus> status) {
    accumulate(total, v.stats);
    total.seconds = secondsSince(start);
    total.sizeRatio = state.sizeRatio();
    v.stats = total;
    v.solveStatus = status;
    run.verdict = std::move(v);
    return run;
  };

  for (std::size_t iteration = 0;; ++iteration) {
    const auto iterStart = Clock::now();
    const bool full = state.abstracted.empty();
    const Deadline deadline = full ? global : std::min(global, deadlineAfter(config.subTimeoutSeconds));
    const VerificationQuery q = abstractQuery(state, query);
    VerifyOptions options;
    options.relaxation = config.relaxation;
    options.bounds = abstractBounds(state, q, prepared.bounds);
    Verdict sub = verify(q, deadline, options);

    IterationRow row;
    row.iteration = iteration;
    row.abstractCount = state.abstracted.size();
    row.prunedCount = state.pruned.size();
    row.sizeRatio = state.sizeRatio();
    row.subVerdict = sub.status;
    const SolveStatus status = statusFor(state.abstracted.size(), layerNodes.size());

    if (sub.status == VerdictStatus::Unsat) {
      row.seconds = secondsSince(iterStart);
      run.rows.push_back(row);
      return finish(std::move(sub), status);
    }
    if (sub.status == VerdictStatus::Timeout) {
      row.seconds = secondsSince(iterStart);
      run.rows.push_back(row);
      if (full || Clock::now() >= global) return finish(std::move(sub), std::nullopt);
      log::info("abstract query timed out at iteration {}; verifying the full network", iteration);
      accumulate(total, sub.stats);
      state = abstract(query.network, prepared.bounds, layer, {}, scores);
      continue;
    }

    std::vector<double> cex = liftCex(state, *sub.counterexample);
    if (checkConcrete(query, cex)) {
      row.seconds = secondsSince(iterStart);
      run.rows.push_back(row);
      Verdict v = Verdict::sat(std::move(cex));
      v.stats = sub.stats;
      return finish(std::move(v), status);
    }
    row.spurious = true;
    row.seconds = secondsSince(iterStart);
    run.rows.push_back(row);
    accumulate(total, sub.stats);
    if (Clock::now() >= global) return finish(Verdict::timeout(), std::nullopt);

    state = refine(state, prepared.bounds, step);
    ++total.refinements;
    if (config.geometricSteps) step *= 2;
  }
}

}  // namespace

CegarRun runAbstractionLoop(const VerificationQuery& query, std::size_t layer, const std::vector<double>& scores,
                            const CegarConfig& config) {
  const auto start = Clock::now();
  query.validate();
  const Prepared prepared = prepareBounds(query, config);
  if (prepared.infeasible) return lpInfeasibleRun(start, prepared.lpSolves);
  return loop(query, layer, scores, config, prepared, start);
}

CegarRun solveWithAbstraction(const Network& net, const VerificationQuery& query, const CegarConfig& config) {
  const auto start = Clock::now();
  query.validate();
  const Prepared prepared = prepareBounds(query, config);
  if (prepared.infeasible) return lpInfeasibleRun(start, prepared.lpSolves);

  std::size_t layer = 0;
  if (config.abstractionLayer) {
    layer = *config.abstractionLayer;
    if (layer == 0 || layer + 1 >= net.layerCount()) throw StructuralError("abstraction layer must be a hidden layer");
  } else {
    try {
      layer = selectAbstractionLayer(net);
    } catch (const NoConvolutionalPrefix& e) {
      log::info("{}; verifying directly", e.what());
      CegarConfig direct = config;
      direct.tightenBounds = false;
      CegarRun run = solveDirect(query, direct);
      run.verdict.stats.lpSolves += prepared.lpSolves;
      run.verdict.stats.seconds = secondsSince(start);
      return run;
    }
  }

  PolicyInputs in;
  in.graph = query.network.get();
  in.layerNodes = query.network->layerNodes(layer);
  in.shape = net.layer(layer).shape;
  in.testSet = config.testSet;
  in.x0 = config.x0 ? *config.x0 : boxCenter(query);
  in.seed = config.seed;
  const std::vector<double> scores = scoreLayer(config.policy, in);
  return loop(query, layer, scores, config, prepared, start);
}

CegarRun solveDirect(const VerificationQuery& query, const CegarConfig& config) {
  const auto start = Clock::now();
  query.validate();
  const Prepared prepared = prepareBounds(query, config);
  if (prepared.infeasible) return lpInfeasibleRun(start, prepared.lpSolves);

  VerifyOptions options;
  options.relaxation = config.relaxation;
  options.bounds = prepared.bounds;
  Verdict v = verify(query, deadlineAfter(config.timeoutSeconds), options);

  CegarRun run;
  IterationRow row;
  row.subVerdict = v.status;
  row.seconds = v.stats.seconds;
  run.rows.push_back(row);
  v.stats.lpSolves += prepared.lpSolves;
  v.stats.seconds = secondsSince(start);
  if (v.status != VerdictStatus::Timeout) v.solveStatus = SolveStatus::FullNetwork;
  run.verdict = std::move(v);
  return run;
}

nlohmann::json iterationReport(const CegarRun& run) {
  nlohmann::json rows = nlohmann::json::array();
  for (const IterationRow& r : run.rows) {
    rows.push_back({{"iteration", r.iteration},
                    {"abstract_neurons", r.abstractCount},
                    {"pruned_neurons", r.prunedCount},
                    {"size_ratio", r.sizeRatio},
                    {"sub_verdict", toString(r.subVerdict)},
                    {"spurious", r.spurious},
                    {"seconds", r.seconds}});
  }
  const Verdict& v = run.verdict;
  nlohmann::json out{{"verdict", toString(v.status)},
                     {"solve_status", v.solveStatus ? nlohmann::json(toString(*v.solveStatus)) : nlohmann::json()},
                     {"iterations", rows},
                     {"refinements", v.stats.refinements},
                     {"size_ratio", v.stats.sizeRatio},
                     {"search_nodes", v.stats.searchNodes},
                     {"lp_solves", v.stats.lpSolves},
                     {"near_tolerance", v.stats.nearTolerance},
                     {"seconds", v.stats.seconds}};
  if (run.abstractionLayer) out["abstraction_layer"] = *run.abstractionLayer;
  if (v.counterexample) out["counterexample"] = *v.counterexample;
  return out;
}

}  // namespace cnnabs
