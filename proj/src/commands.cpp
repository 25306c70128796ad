#include "cnnabs/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cnnabs/log.hpp"

namespace cnnabs {

using nlohmann::json;

int exitCodeFor(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::Unsat:
      return kExitUnsat;
    case VerdictStatus::Sat:
      return kExitSat;
    case VerdictStatus::Timeout:
      return kExitTimeout;
  }
  return kExitError;
}

CegarConfig cegarConfig(const QueryFile& query, const SolveOptions& options) {
  CegarConfig c;
  c.relaxation = options.relaxation;
  c.policy = options.policy.value_or(query.policy.value_or(Policy::SingleClass));
  c.seed = options.seed;
  c.step = options.step;
  c.geometricSteps = options.geometricSteps;
  c.timeoutSeconds = options.timeoutSeconds;
  c.subTimeoutSeconds = options.subTimeoutSeconds;
  c.tightenBounds = !options.noTighten;
  c.abstractionLayer = options.layer;
  c.testSet = query.dataset ? &*query.dataset : nullptr;
  c.x0 = query.x0;
  return c;
}

CegarRun runQuery(const QueryFile& query, const SolveOptions& options) {
  const CegarConfig config = cegarConfig(query, options);
  if (options.boundsOnly) {
    const auto start = Clock::now();
    const BoundsMap interval = intervalPass(*query.query.network, query.query.inputBox);
    const TightenResult t = lpTighten(query.query, interval, options.relaxation);
    CegarRun run;
    run.verdict = t.infeasible ? Verdict::unsat() : Verdict::timeout();
    if (t.infeasible) run.verdict.solveStatus = SolveStatus::LpInfeasible;
    run.verdict.stats.lpSolves = t.lpSolves;
    run.verdict.stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return run;
  }
  if (options.noAbstraction) return solveDirect(query.query, config);
  return solveWithAbstraction(*query.network, query.query, config);
}

json resultsJson(const CegarRun& run, const std::string& source, const SolveOptions& options) {
  json j = iterationReport(run);
  j["format_version"] = kFormatVersion;
  j["query"] = source;
  j["mode"] = options.noAbstraction ? "vanilla" : (options.boundsOnly ? "bounds_only" : "abstraction");
  j["relaxation"] = toString(options.relaxation);
  if (options.policy) j["policy"] = toString(*options.policy);
  return j;
}

namespace {

void printVerdict(std::ostream& out, const CegarRun& run) {
  const Verdict& v = run.verdict;
  out << toString(v.status);
  if (v.solveStatus) out << " (" << toString(*v.solveStatus) << ")";
  out << '\n';
  if (v.counterexample) {
    out << "counterexample:";
    for (double x : *v.counterexample) out << ' ' << formatDouble(x);
    out << '\n';
  }
  out << "refinements: " << v.stats.refinements << ", size ratio: " << v.stats.sizeRatio
      << ", seconds: " << v.stats.seconds << '\n';
}

int finishSolve(const QueryFile& query, const std::string& source, const SolveOptions& options, std::ostream& out) {
  const CegarRun run = runQuery(query, options);
  printVerdict(out, run);
  if (options.results) writeJsonFile(*options.results, resultsJson(run, source, options));
  return exitCodeFor(run.verdict.status);
}

void widenLabels(QueryFile& q) {
  if (q.dataset) q.dataset->labelCount = std::max(q.dataset->labelCount, q.network->outputSize());
}

}  // namespace

int cmdSolve(const std::filesystem::path& queryPath, const SolveOptions& options, std::ostream& out) {
  QueryFile q = loadQuery(queryPath);
  widenLabels(q);
  return finishSolve(q, queryPath.string(), options, out);
}

int cmdSolveAdversarial(const std::filesystem::path& modelPath, const std::filesystem::path& datasetPath,
                        std::size_t sampleIndex, double eps, const SolveOptions& options, std::ostream& out) {
  QueryFile q;
  auto net = std::make_shared<const Network>(loadNetwork(modelPath));
  TestSet data = loadDataset(datasetPath);
  data.validate(net->inputSize());
  if (sampleIndex >= data.size()) throw StructuralError("sample index " + std::to_string(sampleIndex) + " out of range");
  q.query = buildAdversarial(*net, data.samples[sampleIndex], eps);
  q.x0 = data.samples[sampleIndex];
  q.network = std::move(net);
  q.dataset = std::move(data);
  widenLabels(q);
  std::ostringstream source;
  source << modelPath.string() << '#' << sampleIndex << "@eps=" << eps;
  return finishSolve(q, source.str(), options, out);
}

PropagateResult propagateBounds(const VerificationQuery& query, const PropagateOptions& options) {
  PropagateResult r;
  r.bounds = intervalPass(*query.network, query.inputBox);
  if (options.intervalOnly) return r;
  TightenResult t = lpTighten(query, r.bounds, options.relaxation);
  r.infeasible = t.infeasible;
  r.bounds = std::move(t.bounds);
  return r;
}

int cmdPropagateBounds(const std::filesystem::path& queryPath, const PropagateOptions& options, std::ostream& out) {
  const QueryFile q = loadQuery(queryPath);
  const PropagateResult r = propagateBounds(q.query, options);
  const NeuronGraph& g = *q.query.network;
  if (r.infeasible) out << "infeasible: the relaxation refutes the query\n";
  for (std::size_t j = 0; j < g.outputCount(); ++j) {
    const Interval& b = r.bounds[g.outputs()[j]];
    out << "y" << j << " in [" << formatDouble(b.lower) << ", " << formatDouble(b.upper) << "]\n";
  }
  if (options.dump) {
    std::ofstream f(*options.dump);
    if (!f) throw std::runtime_error("cannot write '" + options.dump->string() + "'");
    writeBoundsDump(f, g, r.bounds);
  }
  return 0;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

json runBench(const std::vector<BenchItem>& items, const SolveOptions& options) {
  json rows = json::array();
  struct ModeStats {
    std::map<std::string, std::size_t> verdicts, statuses, unsatStatuses;
    std::vector<double> seconds;
  };
  std::map<std::string, ModeStats> modes;
  std::size_t agree = 0, disagree = 0;

  for (const BenchItem& item : items) {
    std::optional<VerdictStatus> verdicts[2];
    for (int m = 0; m < 2; ++m) {
      SolveOptions o = options;
      o.noAbstraction = m == 0;
      o.boundsOnly = false;
      const std::string mode = m == 0 ? "vanilla" : "abstraction";
      const CegarRun run = runQuery(item.query, o);
      const Verdict& v = run.verdict;
      if (v.status == VerdictStatus::Sat && !checkConcrete(item.query.query, *v.counterexample)) {
        throw std::logic_error("bench: counterexample failed the concrete check on " + item.name);
      }
      const std::string status = v.solveStatus ? std::string(toString(*v.solveStatus)) : "none";
      rows.push_back({{"query", item.name},
                      {"mode", mode},
                      {"verdict", toString(v.status)},
                      {"solve_status", status},
                      {"seconds", v.stats.seconds},
                      {"refinements", v.stats.refinements},
                      {"size_ratio", v.stats.sizeRatio}});
      ModeStats& s = modes[mode];
      ++s.verdicts[std::string(toString(v.status))];
      ++s.statuses[status];
      if (v.status == VerdictStatus::Unsat) ++s.unsatStatuses[status];
      if (v.status != VerdictStatus::Timeout) {
        s.seconds.push_back(v.stats.seconds);
        verdicts[m] = v.status;
      }
    }
    if (verdicts[0] && verdicts[1]) {
      if (*verdicts[0] == *verdicts[1]) {
        ++agree;
      } else {
        ++disagree;
        log::warn("bench: modes disagree on {}", item.name);
      }
    }
  }

  json aggregates = json::object();
  for (const auto& [mode, s] : modes) {
    double sum = 0.0;
    for (double t : s.seconds) sum += t;
    aggregates[mode] = {{"verdicts", s.verdicts},
                        {"solve_status", s.statuses},
                        {"unsat_solve_status", s.unsatStatuses},
                        {"solved", s.seconds.size()},
                        {"mean_seconds", s.seconds.empty() ? 0.0 : sum / static_cast<double>(s.seconds.size())},
                        {"median_seconds", median(s.seconds)}};
  }
  return {{"format_version", kFormatVersion},
          {"rows", rows},
          {"aggregates", aggregates},
          {"agreement", {{"agree", agree}, {"disagree", disagree}}}};
}

int cmdBench(const std::filesystem::path& manifestPath, const SolveOptions& options,
             const std::optional<std::filesystem::path>& reportPath, std::ostream& out) {
  const json manifest = readJsonFile(manifestPath);
  if (manifest.value("format_version", 0) != kFormatVersion) throw StructuralError("unsupported manifest version");
  std::vector<BenchItem> items;
  for (const json& entry : manifest.at("queries")) {
    const std::string rel = entry.get<std::string>();
    QueryFile q = loadQuery(manifestPath.parent_path() / rel);
    widenLabels(q);
    items.push_back({rel, std::move(q)});
  }
  const json report = runBench(items, options);
  if (reportPath) writeJsonFile(*reportPath, report);
  out << report.at("rows").size() << " rows\n";
  for (const auto& [mode, agg] : report.at("aggregates").items()) {
    out << mode << ": solved " << agg.at("solved") << ", median " << agg.at("median_seconds").get<double>()
        << " s, statuses " << agg.at("solve_status").dump() << '\n';
  }
  const std::size_t disagree = report.at("agreement").at("disagree");
  out << "verdict agreement: " << report.at("agreement").at("agree") << " agree, " << disagree << " disagree\n";
  return disagree == 0 ? 0 : kExitError;
}

std::string cactusSvg(const json& report) {
  constexpr double kW = 640, kH = 400, kMargin = 50;
  std::map<std::string, std::vector<double>> times;
  for (const json& row : report.at("rows")) {
    if (row.at("verdict") != "timeout") times[row.at("mode").get<std::string>()].push_back(row.at("seconds"));
  }
  std::size_t maxCount = 1;
  double maxTime = 1e-9;
  for (auto& [mode, t] : times) {
    std::sort(t.begin(), t.end());
    double cumulative = 0.0;
    for (double& x : t) x = cumulative += x;
    maxCount = std::max(maxCount, t.size());
    if (!t.empty()) maxTime = std::max(maxTime, t.back());
  }
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin << "\" y2=\""
      << kH - kMargin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kH - kMargin
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">solved queries (max "
      << maxCount << ")</text>\n"
      << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15 " << kH / 2
      << ")\" text-anchor=\"middle\">cumulative seconds (max " << maxTime << ")</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::size_t c = 0;
  for (const auto& [mode, t] : times) {
    svg << "<polyline fill=\"none\" stroke=\"" << colors[c % 4] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = kMargin + (kW - 2 * kMargin) * static_cast<double>(i + 1) / static_cast<double>(maxCount);
      const double y = kH - kMargin - (kH - 2 * kMargin) * t[i] / maxTime;
      svg << x << ',' << y << ' ';
    }
    svg << "\"/>\n<text x=\"" << kMargin + 10 << "\" y=\"" << kMargin + 20 * (c + 1) << "\" fill=\"" << colors[c % 4]
        << "\">" << mode << "</text>\n";
    ++c;
  }
  svg << "</svg>\n";
  return svg.str();
}

int cmdPlot(const std::filesystem::path& reportPath, const std::filesystem::path& svgPath, std::ostream& out) {
  const json report = readJsonFile(reportPath);
  std::ofstream f(svgPath);
  if (!f) throw std::runtime_error("cannot write '" + svgPath.string() + "'");
  f << cactusSvg(report);
  out << "wrote " << svgPath.string() << '\n';
  return 0;
}

}  // namespace cnnabs
