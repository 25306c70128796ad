#include <gtest/gtest.h>

#include <random>

#include "cnnabs/abstraction.hpp"
#include "cnnabs/verifier.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace cnnabs {
namespace {

TEST(Verify, BoxQueryIsSatWithAValidCounterexample) {
  const VerificationQuery q = testing::toyBoxQuery();
  const Verdict v = verify(q, Deadline::max());
  ASSERT_EQ(v.status, VerdictStatus::Sat);
  ASSERT_TRUE(v.counterexample);
  EXPECT_TRUE(checkConcrete(q, *v.counterexample));
}

TEST(Verify, CancellingAbstractQueryIsUnsat) {
  const VerificationQuery q = testing::cancellingQuery(5.0);
  const BoundsMap b = intervalPass(*q.network, q.inputBox);
  const AbstractionState s = abstract(q.network, b, 2, {2});
  const Verdict v = verify(abstractQuery(s, q), Deadline::max());
  EXPECT_EQ(v.status, VerdictStatus::Unsat);
}

TEST(Verify, CancellingThresholdOneIsSatOnTheAbstractionOnly) {
  const VerificationQuery q = testing::cancellingQuery(1.0);
  const BoundsMap b = intervalPass(*q.network, q.inputBox);
  const AbstractionState s = abstract(q.network, b, 2, {2});
  const Verdict abs = verify(abstractQuery(s, q), Deadline::max());
  ASSERT_EQ(abs.status, VerdictStatus::Sat);
  EXPECT_FALSE(checkConcrete(q, liftCex(s, *abs.counterexample)));
  EXPECT_EQ(verify(q, Deadline::max()).status, VerdictStatus::Unsat);
}

TEST(Verify, ExpiredDeadlineTimesOut) {
  const VerificationQuery q = testing::toyBoxQuery();
  EXPECT_EQ(verify(q, Clock::now() - std::chrono::seconds(1)).status, VerdictStatus::Timeout);
}

TEST(Verify, BackendContract) {
  BranchAndBoundBackend backend;
  VerifierBackend& b = backend;
  EXPECT_EQ(b.name(), "bab");
  EXPECT_EQ(b.verify(testing::toyBoxQuery(), Deadline::max(), {}).status, VerdictStatus::Sat);
}

TEST(Verify, AgreesWithPhaseEnumeration) {
  std::mt19937_64 rng(2024);
  std::size_t sat = 0, unsat = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const Network net = testing::randomCnn(rng);
    const VerificationQuery q = testing::randomQuery(net, rng);
    const testing::OracleResult oracle = testing::phaseEnumerationOracle(q);
    for (MaxRelaxation r : {MaxRelaxation::New, MaxRelaxation::Sota, MaxRelaxation::Planet}) {
      VerifyOptions opts;
      opts.relaxation = r;
      const Verdict v = verify(q, Deadline::max(), opts);
      ASSERT_NE(v.status, VerdictStatus::Timeout);
      EXPECT_EQ(v.status == VerdictStatus::Sat, oracle.sat) << "trial " << trial << " relaxation " << toString(r);
      if (v.status == VerdictStatus::Sat) EXPECT_TRUE(checkConcrete(q, *v.counterexample));
    }
    (oracle.sat ? sat : unsat)++;
  }
  EXPECT_GT(sat, 10u);
  EXPECT_GT(unsat, 10u);
}

// x -> a0 = x, a1 = -x, r0 = relu(a0), r1 = relu(a1)
std::shared_ptr<const NeuronGraph> twoRelus() {
  auto g = std::make_shared<NeuronGraph>();
  const NodeId x = g->addInput();
  const NodeId a0 = g->addAffine(0.0, {{x, 1.0}});
  const NodeId a1 = g->addAffine(0.0, {{x, -1.0}});
  const NodeId r0 = g->addRelu(a0);
  const NodeId r1 = g->addRelu(a1);
  g->setOutputs({r0, r1});
  return g;
}

TEST(SplitHeuristic, PicksTheLargestViolation) {
  const auto g = twoRelus();
  const BoundsMap b = intervalPass(*g, std::vector<Interval>{{-1, 1}});
  const PhaseAssignment open(g->size(), kOpenPhase);
  // r0 off by 0.3, r1 off by 0.7.
  const std::vector<double> point{0.0, 0.0, 0.0, 0.3, 0.7};
  EXPECT_DOUBLE_EQ(plViolation(*g, 3, point), 0.3);
  EXPECT_DOUBLE_EQ(plViolation(*g, 4, point), 0.7);
  EXPECT_EQ(splitHeuristic(*g, open, b, point), NodeId{4});

  const std::vector<double> single{0.0, 0.0, 0.0, 0.3, 0.0};
  EXPECT_EQ(splitHeuristic(*g, open, b, single), NodeId{3});

  const std::vector<double> tie{0.0, 0.0, 0.0, 0.5, 0.5};
  EXPECT_EQ(splitHeuristic(*g, open, b, tie), NodeId{3});

  const std::vector<double> none{0.5, 0.5, -0.5, 0.5, 0.0};
  EXPECT_EQ(splitHeuristic(*g, open, b, none), std::nullopt);
}

TEST(SplitHeuristic, SkipsFixedConstraints) {
  const auto g = twoRelus();
  const BoundsMap b = intervalPass(*g, std::vector<Interval>{{-1, 1}});
  PhaseAssignment phases(g->size(), kOpenPhase);
  phases[4] = 1;
  const std::vector<double> point{0.0, 0.0, 0.0, 0.3, 0.7};
  EXPECT_EQ(splitHeuristic(*g, phases, b, point), NodeId{3});

  const BoundsMap positive = intervalPass(*g, std::vector<Interval>{{0.1, 1}});
  EXPECT_TRUE(phaseFixedByBounds(*g, 3, positive));
  EXPECT_TRUE(phaseFixedByBounds(*g, 4, positive));
  EXPECT_FALSE(phaseFixedByBounds(*g, 3, b));
  EXPECT_EQ(splitHeuristic(*g, PhaseAssignment(g->size(), kOpenPhase), positive, point), std::nullopt);
}

TEST(PlViolation, MaxNodes) {
  const auto g = testing::pairMaxGraph();
  std::vector<double> values = g->evaluate(std::vector<double>{1, 0, 0, 1});
  EXPECT_EQ(plViolation(*g, 7, values), 0.0);
  values[7] += 0.25;
  EXPECT_DOUBLE_EQ(plViolation(*g, 7, values), 0.25);
  EXPECT_EQ(plViolation(*g, 4, values), 0.0);
}

TEST(Verify, PairMaxBoundOnYIsDecidedExactly) {
  VerificationQuery q = testing::pairMaxQuery();
  q.outputConstraints = {{{{0, -1.0}}, 6.0 - 1e-3}};  // y >= 5.999
  EXPECT_EQ(verify(q, Deadline::max()).status, VerdictStatus::Sat);
  q.outputConstraints = {{{{0, -1.0}}, 6.0 + 1e-3}};  // y >= 6.001
  EXPECT_EQ(verify(q, Deadline::max()).status, VerdictStatus::Unsat);
}

}  // namespace
}  // namespace cnnabs
