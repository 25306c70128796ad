#include "cnnabs/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "cnnabs/log.hpp"

namespace cnnabs {

BoundsMap intervalPass(const NeuronGraph& graph, std::span<const Interval> inputBox) {
  if (inputBox.size() != graph.inputCount()) throw StructuralError("input box does not match graph inputs");
  BoundsMap bounds(graph.size());
  for (NodeId id = 0; id < graph.size(); ++id) {
    const Node& n = graph.node(id);
    switch (n.kind) {
      case NodeKind::Input:
        bounds[id] = inputBox[n.inputSlot];
        break;
      case NodeKind::Affine: {
        double lo = n.bias, hi = n.bias;
        for (const Term& t : n.terms) {
          const Interval& s = bounds[t.source];
          if (t.weight >= 0) {
            lo += t.weight * s.lower;
            hi += t.weight * s.upper;
          } else {
            lo += t.weight * s.upper;
            hi += t.weight * s.lower;
          }
        }
        bounds[id] = {lo, hi};
        break;
      }
      case NodeKind::Relu: {
        const Interval& s = bounds[n.sources[0]];
        bounds[id] = {std::max(0.0, s.lower), std::max(0.0, s.upper)};
        break;
      }
      case NodeKind::Max: {
        Interval b{-kInfinity, -kInfinity};
        for (NodeId s : n.sources) {
          b.lower = std::max(b.lower, bounds[s].lower);
          b.upper = std::max(b.upper, bounds[s].upper);
        }
        bounds[id] = b;
        break;
      }
    }
  }
  return bounds;
}

std::vector<LpConstraint> encodeReluRelaxation(VarId a, VarId b, Interval aBounds) {
  std::vector<LpConstraint> out;
  const double l = aBounds.lower, u = aBounds.upper;
  if (u <= 0) {
    out.push_back({LinearExpr().add(b, 1.0), Relation::Equal, 0.0});
  } else if (l >= 0) {
    out.push_back({LinearExpr().add(b, 1.0).add(a, -1.0), Relation::Equal, 0.0});
  } else {
    out.push_back({LinearExpr().add(b, 1.0), Relation::GreaterEqual, 0.0});
    out.push_back({LinearExpr().add(b, 1.0).add(a, -1.0), Relation::GreaterEqual, 0.0});
    // b <= u (a - l) / (u - l)
    const double slope = u / (u - l);
    out.push_back({LinearExpr().add(b, 1.0).add(a, -slope), Relation::LessEqual, -slope * l});
  }
  return out;
}

MaxBoundSummary summarizeMax(std::span<const Interval> in) {
  if (in.empty()) throw StructuralError("max constraint needs at least one input");
  MaxBoundSummary s;
  s.first = 0;
  for (std::size_t i = 1; i < in.size(); ++i) {
    if (in[i].upper > in[s.first].upper) s.first = i;
  }
  s.uFirst = in[s.first].upper;
  s.lMax = -kInfinity;
  for (const Interval& b : in) s.lMax = std::max(s.lMax, b.lower);
  s.uSecond = -kInfinity;
  s.second = s.first;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i != s.first && in[i].upper > s.uSecond) {
      s.uSecond = in[i].upper;
      s.second = i;
    }
  }
  s.uMin = kInfinity;
  for (const Interval& b : in) {
    if (b.upper >= s.lMax) s.uMin = std::min(s.uMin, b.upper);
  }
  return s;
}

namespace {

constexpr std::array<std::pair<MaxRelaxation, std::string_view>, 5> kRelaxationNames{{
    {MaxRelaxation::New, "new"},
    {MaxRelaxation::Sota, "sota"},
    {MaxRelaxation::Planet, "planet"},
    {MaxRelaxation::DeepPoly, "deeppoly"},
    {MaxRelaxation::CnnCert, "cnncert"},
}};

double reluOf(double v) { return std::max(0.0, v); }

// b <= lambda + sum_i ReLU(u_i - lambda) / (u_i - l_i) * (a_i - l_i).
// Inputs with u_i == l_i contribute nothing since a_i - l_i is identically 0.
LpConstraint lambdaFace(std::span<const VarId> a, std::span<const Interval> in, VarId b, double lambda) {
  LinearExpr e;
  e.add(b, 1.0);
  double rhs = lambda;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double width = in[i].width();
    if (width <= 0) continue;
    const double w = reluOf(in[i].upper - lambda) / width;
    if (w == 0.0) continue;
    e.add(a[i], -w);
    rhs -= w * in[i].lower;
  }
  return {std::move(e), Relation::LessEqual, rhs};
}

std::vector<LpConstraint> lowerFaces(std::span<const VarId> a, VarId b) {
  std::vector<LpConstraint> out;
  for (VarId ai : a) out.push_back({LinearExpr().add(b, 1.0).add(ai, -1.0), Relation::GreaterEqual, 0.0});
  return out;
}

// gamma = min(max(gamma0, lMax), uMin), gamma0 from the CNN-Cert construction.
double cnnCertGamma(std::span<const Interval> in, const MaxBoundSummary& s) {
  double num = -1.0, den = 0.0;
  for (const Interval& b : in) {
    const double width = b.width();
    if (width <= 0) continue;
    num += b.upper / width;
    den += 1.0 / width;
  }
  const double gamma0 = den > 0 ? num / den : s.lMax;
  return std::min(std::max(gamma0, s.lMax), s.uMin);
}

LpConstraint planetUpper(std::span<const VarId> a, std::span<const Interval> in, VarId b, double lMax) {
  LinearExpr e;
  e.add(b, 1.0);
  double rhs = lMax;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e.add(a[i], -1.0);
    rhs -= in[i].lower;
  }
  return {std::move(e), Relation::LessEqual, rhs};
}

bool sameConstraint(const LpConstraint& a, const LpConstraint& b) {
  if (a.relation != b.relation || std::abs(a.rhs - b.rhs) > 1e-12) return false;
  const auto& ca = a.lhs.coefficients();
  const auto& cb = b.lhs.coefficients();
  if (ca.size() != cb.size()) return false;
  return std::equal(ca.begin(), ca.end(), cb.begin(), [](const auto& x, const auto& y) {
    return x.first == y.first && std::abs(x.second - y.second) <= 1e-12;
  });
}

// In two dimensions the u_min face and the u_f face coincide.
std::vector<LpConstraint> withoutDuplicates(std::vector<LpConstraint> in) {
  std::vector<LpConstraint> out;
  for (LpConstraint& c : in) {
    if (std::none_of(out.begin(), out.end(), [&](const LpConstraint& o) { return sameConstraint(o, c); })) {
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

std::string_view toString(MaxRelaxation r) {
  for (const auto& [k, n] : kRelaxationNames) {
    if (k == r) return n;
  }
  return "unknown";
}

MaxRelaxation parseMaxRelaxation(std::string_view name) {
  for (const auto& [k, n] : kRelaxationNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown relaxation '" + std::string(name) + "'");
}

std::vector<LpConstraint> encodeMaxRelaxation(MaxRelaxation kind, std::span<const VarId> a,
                                              std::span<const Interval> in, VarId b) {
  if (a.size() != in.size()) throw StructuralError("max relaxation: inputs and bounds differ in length");
  const MaxBoundSummary s = summarizeMax(in);
  std::vector<LpConstraint> out;
  if (a.size() == 1 || s.trivial()) {
    out.push_back({LinearExpr().add(b, 1.0).add(a[s.first], -1.0), Relation::Equal, 0.0});
    return out;
  }
  switch (kind) {
    case MaxRelaxation::New: {
      out = lowerFaces(a, b);
      out.push_back(lambdaFace(a, in, b, s.lMax));
      if (s.uMin != s.lMax) out.push_back(lambdaFace(a, in, b, s.uMin));
      const double lf = in[s.first].lower;
      const double span = s.uFirst - lf;
      if (span >= 1e-9) {
        // b <= u_f (u_s - l_f) / (u_f - l_f) + a_f (u_f - u_s) / (u_f - l_f)
        LinearExpr e;
        e.add(b, 1.0).add(a[s.first], -(s.uFirst - s.uSecond) / span);
        out.push_back({std::move(e), Relation::LessEqual, s.uFirst * (s.uSecond - lf) / span});
      }
      break;
    }
    case MaxRelaxation::Sota: {
      out = lowerFaces(a, b);
      out.push_back(lambdaFace(a, in, b, cnnCertGamma(in, s)));
      out.push_back({LinearExpr().add(b, 1.0), Relation::LessEqual, s.uFirst});
      out.push_back(planetUpper(a, in, b, s.lMax));
      break;
    }
    case MaxRelaxation::Planet: {
      out = lowerFaces(a, b);
      out.push_back(planetUpper(a, in, b, s.lMax));
      break;
    }
    case MaxRelaxation::DeepPoly: {
      std::size_t m = 0;
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i].lower == s.lMax) {
          m = i;
          break;
        }
      }
      out.push_back({LinearExpr().add(b, 1.0).add(a[m], -1.0), Relation::GreaterEqual, 0.0});
      out.push_back({LinearExpr().add(b, 1.0), Relation::LessEqual, s.uFirst});
      break;
    }
    case MaxRelaxation::CnnCert: {
      const double gamma = cnnCertGamma(in, s);
      std::vector<double> w(a.size(), 0.0);
      double g = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (in[i].width() > 0) w[i] = reluOf(in[i].upper - gamma) / in[i].width();
        g += w[i];
      }
      double eta = gamma;
      if (g < 1.0 - 1e-12) {
        eta = kInfinity;
        for (const Interval& iv : in) eta = std::min(eta, iv.lower);
      } else if (g > 1.0 + 1e-12) {
        eta = s.uFirst;
      }
      // b >= eta + sum_i w_i (a_i - eta)
      LinearExpr lower;
      lower.add(b, 1.0);
      for (std::size_t i = 0; i < a.size(); ++i) lower.add(a[i], -w[i]);
      out.push_back({std::move(lower), Relation::GreaterEqual, eta * (1.0 - g)});
      out.push_back(lambdaFace(a, in, b, gamma));
      break;
    }
  }
  return withoutDuplicates(std::move(out));
}

LpProblem encodeQueryRelaxation(const NeuronGraph& graph, const BoundsMap& bounds,
                                std::span<const OutputConstraint> outputConstraints, MaxRelaxation relaxation,
                                std::span<const int> phases) {
  LpProblem lp;
  for (NodeId id = 0; id < graph.size(); ++id) {
    lp.addVariable(bounds[id].lower, bounds[id].upper, "n" + std::to_string(id));
  }
  auto phaseOf = [&phases](NodeId id) { return phases.empty() ? kOpenPhase : phases[id]; };
  for (NodeId id = 0; id < graph.size(); ++id) {
    const Node& n = graph.node(id);
    switch (n.kind) {
      case NodeKind::Input:
        break;
      case NodeKind::Affine: {
        LinearExpr e;
        e.add(id, 1.0);
        for (const Term& t : n.terms) e.add(t.source, -t.weight);
        lp.addConstraint(std::move(e), Relation::Equal, n.bias);
        break;
      }
      case NodeKind::Relu: {
        const NodeId a = n.sources[0];
        const int phase = phaseOf(id);
        if (phase == 1) {
          lp.addConstraint(LinearExpr().add(id, 1.0).add(a, -1.0), Relation::Equal, 0.0);
          lp.addConstraint(LinearExpr().add(a, 1.0), Relation::GreaterEqual, 0.0);
        } else if (phase == 0) {
          lp.addConstraint(LinearExpr().add(id, 1.0), Relation::Equal, 0.0);
          lp.addConstraint(LinearExpr().add(a, 1.0), Relation::LessEqual, 0.0);
        } else {
          for (LpConstraint& c : encodeReluRelaxation(a, id, bounds[a])) lp.addConstraint(std::move(c));
        }
        break;
      }
      case NodeKind::Max: {
        const int phase = phaseOf(id);
        if (phase >= 0) {
          const NodeId winner = n.sources[static_cast<std::size_t>(phase)];
          lp.addConstraint(LinearExpr().add(id, 1.0).add(winner, -1.0), Relation::Equal, 0.0);
          for (NodeId s : n.sources) {
            if (s != winner) lp.addConstraint(LinearExpr().add(winner, 1.0).add(s, -1.0), Relation::GreaterEqual, 0.0);
          }
        } else {
          std::vector<Interval> in;
          in.reserve(n.sources.size());
          for (NodeId s : n.sources) in.push_back(bounds[s]);
          for (LpConstraint& c : encodeMaxRelaxation(relaxation, n.sources, in, id)) lp.addConstraint(std::move(c));
        }
        break;
      }
    }
  }
  for (const OutputConstraint& q : outputConstraints) {
    LinearExpr e;
    for (const Term& t : q.terms) e.add(graph.outputs().at(t.source), t.weight);
    lp.addConstraint(std::move(e), Relation::LessEqual, -q.constant);
  }
  return lp;
}

TightenResult lpTighten(const VerificationQuery& query, const BoundsMap& initial, MaxRelaxation relaxation) {
  query.validate();
  const NeuronGraph& graph = *query.network;
  TightenResult result;
  result.bounds = initial;
  BoundsMap& bounds = result.bounds;

  {
    const LpProblem lp = encodeQueryRelaxation(graph, bounds, query.outputConstraints, relaxation);
    ++result.lpSolves;
    if (solve(lp).status == LpStatus::Infeasible) {
      result.infeasible = true;
      return result;
    }
  }

  for (NodeId id = 0; id < graph.size(); ++id) {
    if (graph.node(id).kind == NodeKind::Input) continue;
    LpProblem lp = encodeQueryRelaxation(graph, bounds, query.outputConstraints, relaxation);
    Interval& b = bounds[id];
    for (Sense sense : {Sense::Maximize, Sense::Minimize}) {
      lp.setObjective(LinearExpr().add(id, 1.0), sense);
      LpOutcome outcome;
      try {
        ++result.lpSolves;
        outcome = solve(lp);
      } catch (const LpSolverError& e) {
        ++result.solverFailures;
        log::warn("bound tightening: LP failure on node {} ({}); keeping previous bound", id, e.what());
        continue;
      }
      if (outcome.status == LpStatus::Infeasible) {
        result.infeasible = true;
        return result;
      }
      if (outcome.status != LpStatus::Optimal) continue;
      if (sense == Sense::Maximize) {
        b.upper = std::min(b.upper, outcome.optimum);
      } else {
        b.lower = std::max(b.lower, outcome.optimum);
      }
    }
    if (b.lower > b.upper) {
      // Only reachable through round-off on a (near) point-valued neuron.
      const double mid = 0.5 * (b.lower + b.upper);
      b = {mid, mid};
    }
  }
  return result;
}

}  // namespace cnnabs
