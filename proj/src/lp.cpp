#include "cnnabs/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cnnabs {

LinearExpr& LinearExpr::add(VarId var, double coefficient) {
  if (coefficient == 0.0) return *this;
  auto [it, inserted] = coefficients_.try_emplace(var, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) coefficients_.erase(it);
  }
  return *this;
}

double LinearExpr::coefficient(VarId var) const {
  auto it = coefficients_.find(var);
  return it == coefficients_.end() ? 0.0 : it->second;
}

double LinearExpr::evaluate(std::span<const double> point) const {
  double v = constant_;
  for (const auto& [var, c] : coefficients_) v += c * point[var];
  return v;
}

VarId LpProblem::addVariable(double lower, double upper, std::string name) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("variable bounds must satisfy lower <= upper");
  }
  lower_.push_back(lower);
  upper_.push_back(upper);
  if (name.empty()) name = "v" + std::to_string(names_.size());
  names_.push_back(std::move(name));
  return lower_.size() - 1;
}

void LpProblem::setBounds(VarId var, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("variable bounds must satisfy lower <= upper");
  lower_.at(var) = lower;
  upper_.at(var) = upper;
}

void LpProblem::addConstraint(LpConstraint c) {
  for (const auto& [var, coef] : c.lhs.coefficients()) {
    if (var >= variableCount()) throw std::invalid_argument("constraint references an undeclared variable");
  }
  constraints_.push_back(std::move(c));
}

void LpProblem::setObjective(LinearExpr objective, Sense sense) {
  for (const auto& [var, coef] : objective.coefficients()) {
    if (var >= variableCount()) throw std::invalid_argument("objective references an undeclared variable");
  }
  objective_ = std::move(objective);
  sense_ = sense;
}

namespace {

// Dense-tableau bounded-variable simplex over A x = 0, lo <= x <= hi, where
// the columns are: user variables, one slack per row, then artificials.
class BoundedSimplex {
 public:
  BoundedSimplex(const LpProblem& problem, const LpOptions& options) : options_(options) {
    n_ = problem.variableCount();
    m_ = problem.constraints().size();

    lo_.assign(n_ + m_, 0.0);
    hi_.assign(n_ + m_, 0.0);
    x_.assign(n_ + m_, 0.0);
    for (VarId v = 0; v < n_; ++v) {
      lo_[v] = problem.lower(v);
      hi_[v] = problem.upper(v);
      x_[v] = std::isfinite(lo_[v]) ? lo_[v] : (std::isfinite(hi_[v]) ? hi_[v] : 0.0);
    }

    // Slack s_i = row_i . x carries the constraint as a bound.
    std::vector<double> activity(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const LpConstraint& c = problem.constraints()[i];
      const double rhs = c.rhs - c.lhs.constant();
      const std::size_t s = n_ + i;
      lo_[s] = c.relation == Relation::LessEqual ? -kInfinity : rhs;
      hi_[s] = c.relation == Relation::GreaterEqual ? kInfinity : rhs;
      for (const auto& [var, coef] : c.lhs.coefficients()) activity[i] += coef * x_[var];
    }

    // Rows whose slack starts outside its bounds get an artificial column.
    std::vector<double> artSign(m_, 0.0);
    std::size_t artCount = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t s = n_ + i;
      if (activity[i] >= lo_[s] && activity[i] <= hi_[s]) {
        x_[s] = activity[i];
      } else {
        x_[s] = std::clamp(activity[i], lo_[s], hi_[s]);
        const double gap = activity[i] - x_[s];
        artSign[i] = gap > 0 ? -1.0 : 1.0;
        ++artCount;
      }
    }

    cols_ = n_ + m_ + artCount;
    lo_.resize(cols_, 0.0);
    hi_.resize(cols_, kInfinity);
    x_.resize(cols_, 0.0);
    A_.assign(m_ * cols_, 0.0);
    basis_.assign(m_, 0);
    isBasic_.assign(cols_, false);
    firstArtificial_ = n_ + m_;

    std::size_t art = firstArtificial_;
    for (std::size_t i = 0; i < m_; ++i) {
      const LpConstraint& c = problem.constraints()[i];
      for (const auto& [var, coef] : c.lhs.coefficients()) at(A_, i, var) = coef;
      at(A_, i, n_ + i) = -1.0;
      if (artSign[i] != 0.0) {
        at(A_, i, art) = artSign[i];
        x_[art] = std::abs(activity[i] - x_[n_ + i]);
        basis_[i] = art++;
      } else {
        basis_[i] = n_ + i;
      }
      isBasic_[basis_[i]] = true;
    }
    T_ = A_;
    for (std::size_t i = 0; i < m_; ++i) scaleRow(i, 1.0 / at(T_, i, basis_[i]));

    cost_.assign(cols_, 0.0);
    if (problem.sense() != Sense::Feasibility) {
      const double sign = problem.sense() == Sense::Maximize ? -1.0 : 1.0;
      for (const auto& [var, coef] : problem.objective().coefficients()) phaseTwoCost_.emplace_back(var, sign * coef);
    }
    hasObjective_ = problem.sense() != Sense::Feasibility;
  }

  LpOutcome run() {
    LpOutcome out;
    if (firstArtificial_ < cols_) {
      std::fill(cost_.begin(), cost_.end(), 0.0);
      for (std::size_t a = firstArtificial_; a < cols_; ++a) cost_[a] = 1.0;
      iterate();  // phase one is bounded below by zero
      double infeasibility = 0.0;
      for (std::size_t a = firstArtificial_; a < cols_; ++a) infeasibility += x_[a];
      if (infeasibility > options_.feasibilityTolerance) {
        out.status = LpStatus::Infeasible;
        out.iterations = iterations_;
        return out;
      }
      retireArtificials();
    }
    if (hasObjective_) {
      std::fill(cost_.begin(), cost_.end(), 0.0);
      for (const auto& [var, c] : phaseTwoCost_) cost_[var] = c;
      if (!iterate()) {
        out.status = LpStatus::Unbounded;
        out.iterations = iterations_;
        return out;
      }
    }
    reinvert();
    computeBasics();
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t b = basis_[r];
      const double excess = std::max(lo_[b] - x_[b], x_[b] - hi_[b]);
      if (excess > options_.feasibilityTolerance * (1.0 + std::abs(x_[b]))) {
        throw LpSolverError("simplex lost primal feasibility (excess " + std::to_string(excess) + ")");
      }
    }
    out.status = LpStatus::Optimal;
    out.point.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (VarId v = 0; v < n_; ++v) out.point[v] = std::clamp(out.point[v], lo_[v], hi_[v]);
    out.iterations = iterations_;
    return out;
  }

 private:
  double& at(std::vector<double>& M, std::size_t r, std::size_t c) { return M[r * cols_ + c]; }
  double at(const std::vector<double>& M, std::size_t r, std::size_t c) const { return M[r * cols_ + c]; }

  void scaleRow(std::size_t r, double f) {
    for (std::size_t c = 0; c < cols_; ++c) at(T_, r, c) *= f;
  }

  void pivot(std::size_t r, std::size_t col) {
    scaleRow(r, 1.0 / at(T_, r, col));
    at(T_, r, col) = 1.0;
    const double* pivotRow = &T_[r * cols_];
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = at(T_, i, col);
      if (f == 0.0) continue;
      double* row = &T_[i * cols_];
      for (std::size_t c = 0; c < cols_; ++c) row[c] -= f * pivotRow[c];
      row[col] = 0.0;
    }
    isBasic_[basis_[r]] = false;
    basis_[r] = col;
    isBasic_[col] = true;
    ++sinceReinvert_;
  }

  // Recomputes B^-1 A from the original rows for the current basis.
  void reinvert() {
    T_ = A_;
    std::vector<std::size_t> newBasis(m_, 0);
    std::vector<bool> used(m_, false);
    for (std::size_t b : basis_) {
      std::size_t best = m_;
      double bestAbs = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (!used[i] && std::abs(at(T_, i, b)) > bestAbs) {
          bestAbs = std::abs(at(T_, i, b));
          best = i;
        }
      }
      if (best == m_ || bestAbs < 1e-12) throw LpSolverError("singular basis during reinversion");
      scaleRow(best, 1.0 / at(T_, best, b));
      at(T_, best, b) = 1.0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == best) continue;
        const double f = at(T_, i, b);
        if (f == 0.0) continue;
        for (std::size_t c = 0; c < cols_; ++c) at(T_, i, c) -= f * at(T_, best, c);
        at(T_, i, b) = 0.0;
      }
      used[best] = true;
      newBasis[best] = b;
    }
    basis_ = std::move(newBasis);
    sinceReinvert_ = 0;
  }

  void computeBasics() {
    for (std::size_t r = 0; r < m_; ++r) {
      double v = 0.0;
      const double* row = &T_[r * cols_];
      for (std::size_t c = 0; c < cols_; ++c) {
        if (!isBasic_[c] && row[c] != 0.0) v -= row[c] * x_[c];
      }
      x_[basis_[r]] = v;
    }
  }

  // Runs primal simplex iterations on cost_. Returns false when unbounded.
  bool iterate() {
    bool bland = false;
    std::size_t degenerate = 0;
    std::vector<double> dual(m_);
    for (;;) {
      if (++iterations_ > options_.maxIterations) throw LpSolverError("simplex iteration limit exceeded");
      if (sinceReinvert_ >= options_.reinvertEvery) reinvert();
      computeBasics();

      for (std::size_t r = 0; r < m_; ++r) dual[r] = cost_[basis_[r]];

      std::size_t entering = cols_;
      double enteringDir = 0.0;
      double bestScore = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (isBasic_[j] || lo_[j] == hi_[j]) continue;
        double d = cost_[j];
        for (std::size_t r = 0; r < m_; ++r) {
          const double t = at(T_, r, j);
          if (t != 0.0) d -= dual[r] * t;
        }
        double dir = 0.0;
        if (d < -options_.pivotTolerance && x_[j] < hi_[j]) {
          dir = 1.0;
        } else if (d > options_.pivotTolerance && x_[j] > lo_[j]) {
          dir = -1.0;
        } else {
          continue;
        }
        if (bland) {
          entering = j;
          enteringDir = dir;
          break;
        }
        if (std::abs(d) > bestScore) {
          bestScore = std::abs(d);
          entering = j;
          enteringDir = dir;
        }
      }
      if (entering == cols_) return true;

      const std::size_t j = entering;
      double step = enteringDir > 0 ? hi_[j] - x_[j] : x_[j] - lo_[j];
      std::size_t leaveRow = m_;
      double leaveAlpha = 0.0;
      for (std::size_t r = 0; r < m_; ++r) {
        const double alpha = -at(T_, r, j) * enteringDir;
        if (std::abs(alpha) <= options_.pivotTolerance) continue;
        const std::size_t b = basis_[r];
        double t;
        if (alpha > 0) {
          if (!std::isfinite(hi_[b])) continue;
          t = (hi_[b] - x_[b]) / alpha;
        } else {
          if (!std::isfinite(lo_[b])) continue;
          t = (lo_[b] - x_[b]) / alpha;
        }
        t = std::max(t, 0.0);
        constexpr double kTie = 1e-12;
        bool take = t < step - kTie;
        if (!take && leaveRow != m_ && std::abs(t - step) <= kTie) {
          take = bland ? b < basis_[leaveRow] : std::abs(alpha) > std::abs(leaveAlpha);
        }
        if (take) {
          step = std::min(step, t);
          leaveRow = r;
          leaveAlpha = alpha;
        }
      }
      if (!std::isfinite(step)) return false;

      if (step <= 1e-12) {
        if (++degenerate >= options_.blandAfter) bland = true;
      } else {
        degenerate = 0;
      }

      if (leaveRow == m_) {
        x_[j] = enteringDir > 0 ? hi_[j] : lo_[j];
        continue;
      }
      x_[j] += enteringDir * step;
      const std::size_t b = basis_[leaveRow];
      x_[b] = leaveAlpha > 0 ? hi_[b] : lo_[b];
      pivot(leaveRow, j);
    }
  }

  // Fixes artificials at zero and pivots basic ones out where possible.
  void retireArtificials() {
    for (std::size_t a = firstArtificial_; a < cols_; ++a) {
      hi_[a] = 0.0;
      if (!isBasic_[a]) x_[a] = 0.0;
    }
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < firstArtificial_) continue;
      std::size_t best = cols_;
      double bestAbs = 1e-7;
      for (std::size_t c = 0; c < firstArtificial_; ++c) {
        if (!isBasic_[c] && std::abs(at(T_, r, c)) > bestAbs) {
          bestAbs = std::abs(at(T_, r, c));
          best = c;
        }
      }
      if (best == cols_) continue;  // redundant row
      const std::size_t a = basis_[r];
      pivot(r, best);
      x_[a] = 0.0;
    }
    computeBasics();
    for (std::size_t a = firstArtificial_; a < cols_; ++a) {
      if (isBasic_[a]) x_[a] = 0.0;
    }
  }

  LpOptions options_;
  std::size_t n_ = 0, m_ = 0, cols_ = 0, firstArtificial_ = 0;
  std::vector<double> A_, T_;
  std::vector<double> lo_, hi_, x_, cost_;
  std::vector<std::pair<VarId, double>> phaseTwoCost_;
  bool hasObjective_ = false;
  std::vector<std::size_t> basis_;
  std::vector<bool> isBasic_;
  std::size_t iterations_ = 0;
  std::size_t sinceReinvert_ = 0;
};

}  // namespace

LpOutcome solve(const LpProblem& problem, const LpOptions& options) {
  for (VarId v = 0; v < problem.variableCount(); ++v) {
    if (problem.lower(v) > problem.upper(v)) return {};
  }
  BoundedSimplex simplex(problem, options);
  LpOutcome out = simplex.run();
  if (out.status == LpStatus::Optimal) out.optimum = problem.objective().evaluate(out.point);
  return out;
}

std::vector<LpViolation> checkPoint(const LpProblem& problem, std::span<const double> point, double tolerance) {
  std::vector<LpViolation> violations;
  for (VarId v = 0; v < problem.variableCount(); ++v) {
    const double excess = std::max(problem.lower(v) - point[v], point[v] - problem.upper(v));
    if (excess > tolerance) violations.push_back({LpViolation::Kind::Bound, v, excess});
  }
  for (std::size_t i = 0; i < problem.constraints().size(); ++i) {
    const LpConstraint& c = problem.constraints()[i];
    const double r = c.residual(point);
    double excess = 0.0;
    switch (c.relation) {
      case Relation::LessEqual:
        excess = r;
        break;
      case Relation::GreaterEqual:
        excess = -r;
        break;
      case Relation::Equal:
        excess = std::abs(r);
        break;
    }
    if (excess > tolerance) violations.push_back({LpViolation::Kind::Constraint, i, excess});
  }
  return violations;
}

namespace {

void writeExpr(std::ostream& os, const LpProblem& problem, const LinearExpr& e) {
  bool first = true;
  for (const auto& [var, c] : e.coefficients()) {
    if (!first || c < 0) os << (c < 0 ? " - " : " + ");
    os << std::abs(c) << ' ' << problem.name(var);
    first = false;
  }
  if (first) os << '0';
}

}  // namespace

std::string toLpText(const LpProblem& problem) {
  std::ostringstream os;
  os.precision(17);
  switch (problem.sense()) {
    case Sense::Maximize:
      os << "Maximize\n obj: ";
      break;
    case Sense::Minimize:
      os << "Minimize\n obj: ";
      break;
    case Sense::Feasibility:
      os << "Minimize\n obj: ";
      break;
  }
  writeExpr(os, problem, problem.objective());
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < problem.constraints().size(); ++i) {
    const LpConstraint& c = problem.constraints()[i];
    os << " c" << i << ": ";
    writeExpr(os, problem, c.lhs);
    const char* rel = c.relation == Relation::LessEqual ? " <= " : (c.relation == Relation::Equal ? " = " : " >= ");
    os << rel << c.rhs - c.lhs.constant() << '\n';
  }
  os << "Bounds\n";
  for (VarId v = 0; v < problem.variableCount(); ++v) {
    const double lo = problem.lower(v), hi = problem.upper(v);
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      os << ' ' << problem.name(v) << " free\n";
    } else {
      os << ' ';
      if (std::isfinite(lo)) os << lo; else os << "-inf";
      os << " <= " << problem.name(v) << " <= ";
      if (std::isfinite(hi)) os << hi; else os << "+inf";
      os << '\n';
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace cnnabs
