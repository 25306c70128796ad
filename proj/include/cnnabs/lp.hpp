#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cnnabs {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

using VarId = std::size_t;

// sum_i coefficients[i] * x_i + constant. Zero coefficients are never stored.
class LinearExpr {
 public:
  LinearExpr() = default;
  explicit LinearExpr(double constant) : constant_(constant) {}

  LinearExpr& add(VarId var, double coefficient);
  LinearExpr& addConstant(double c) {
    constant_ += c;
    return *this;
  }

  const std::map<VarId, double>& coefficients() const { return coefficients_; }
  double constant() const { return constant_; }
  double coefficient(VarId var) const;
  double evaluate(std::span<const double> point) const;

 private:
  std::map<VarId, double> coefficients_;
  double constant_ = 0.0;
};

enum class Relation { LessEqual, Equal, GreaterEqual };

// lhs (relation) rhs
struct LpConstraint {
  LinearExpr lhs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;

  // lhs - rhs: positive means a <= constraint is violated by that amount.
  double residual(std::span<const double> point) const { return lhs.evaluate(point) - rhs; }
};

enum class Sense { Minimize, Maximize, Feasibility };

class LpProblem {
 public:
  VarId addVariable(double lower = -kInfinity, double upper = kInfinity, std::string name = {});
  void setBounds(VarId var, double lower, double upper);
  void addConstraint(LpConstraint c);
  void addConstraint(LinearExpr lhs, Relation relation, double rhs) { addConstraint({std::move(lhs), relation, rhs}); }
  void setObjective(LinearExpr objective, Sense sense);

  std::size_t variableCount() const { return lower_.size(); }
  double lower(VarId v) const { return lower_.at(v); }
  double upper(VarId v) const { return upper_.at(v); }
  const std::string& name(VarId v) const { return names_.at(v); }
  const std::vector<LpConstraint>& constraints() const { return constraints_; }
  const LinearExpr& objective() const { return objective_; }
  Sense sense() const { return sense_; }

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::string> names_;
  std::vector<LpConstraint> constraints_;
  LinearExpr objective_;
  Sense sense_ = Sense::Feasibility;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpOutcome {
  LpStatus status = LpStatus::Infeasible;
  double optimum = 0.0;        // valid when Optimal
  std::vector<double> point;   // valid when Optimal
  std::size_t iterations = 0;
};

struct LpOptions {
  double feasibilityTolerance = 1e-6;
  double pivotTolerance = 1e-9;
  // Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t blandAfter = 50;
  std::size_t maxIterations = 200000;
  std::size_t reinvertEvery = 64;
};

// Numerical failure inside the solver. Never converted into a verdict.
class LpSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bounded-variable primal simplex (two phases, Dantzig pricing with a
// Bland's-rule fallback against cycling).
LpOutcome solve(const LpProblem& problem, const LpOptions& options = {});

struct LpViolation {
  enum class Kind { Bound, Constraint };
  Kind kind = Kind::Constraint;
  std::size_t index = 0;  // variable id or constraint index
  double magnitude = 0.0;
};

std::vector<LpViolation> checkPoint(const LpProblem& problem, std::span<const double> point,
                                    double tolerance = 1e-6);

// LP-style plain-text dump, one constraint per line.
std::string toLpText(const LpProblem& problem);

}  // namespace cnnabs
