#include <gtest/gtest.h>

#include "support.hpp"

using namespace cegarette;
using namespace cegarette::testing;

TEST(Solver, RunningExampleIsUnsat) {
  const Verdict v = solve(example_query());
  EXPECT_EQ(v.status, Status::Unsat);
  EXPECT_FALSE(v.witness);
}

TEST(Solver, AbstractRunningExampleIsSat) {
  const Query q(merged_example_network(), InputBox({20.0}, {21.0}), OutputProperty{800.0});
  const Verdict v = solve(q);
  ASSERT_EQ(v.status, Status::Sat);
  ASSERT_TRUE(v.witness);
  EXPECT_TRUE(q.input.contains(*v.witness));
  EXPECT_GT(evaluate_scalar(q.network, *v.witness), 800.0);
}

TEST(Solver, EnumerationMatchesOracleOnRunningExample) {
  EXPECT_EQ(solve_by_enumeration(example_query()).status, Status::Unsat);
  EXPECT_EQ(solve_by_enumeration(Query(example_network(), InputBox({20.0}, {21.0}), OutputProperty{700.0})).status,
            Status::Sat);
}

TEST(Solver, EnumerationRefusesLargeNets) {
  Rng rng(1);
  const Network net = random_network(rng, 2, {30}, 1);
  EXPECT_THROW(solve_by_enumeration(Query(net, InputBox({0.0, 0.0}, {1.0, 1.0}), OutputProperty{0.0})),
               PreconditionError);
}

TEST(Solver, RandomQueriesAgreeWithOracle) {
  Rng rng(31337);
  std::size_t sat = 0, unsat = 0;
  for (int t = 0; t < 150; ++t) {
    const std::size_t n = rng.integer(1, 3);
    const Network net = random_bounded_net(rng, n, 8);
    const InputBox box = random_box(rng, n);
    const Query q(net, box, OutputProperty{random_threshold(rng, net, box)});
    const Status expected = oracle::decide(q);
    const Verdict v = solve(q);
    EXPECT_EQ(v.status, expected) << "query " << t;
    EXPECT_EQ(solve_by_enumeration(q).status, expected) << "query " << t;
    if (v.status == Status::Sat) {
      ASSERT_TRUE(v.witness);
      EXPECT_TRUE(box.contains(*v.witness));
      EXPECT_GT(evaluate_scalar(net, *v.witness), q.output.threshold);
      ++sat;
    } else {
      ++unsat;
    }
  }
  EXPECT_GT(sat, 10u);
  EXPECT_GT(unsat, 10u);
}

TEST(Solver, PruningIsSound) {
  Rng rng(77);
  SolverOptions opt;
  opt.audit_pruning = true;
  std::size_t pruned = 0;
  for (int t = 0; t < 60; ++t) {
    const Network net = random_network(rng, 2, {rng.integer(3, 6), rng.integer(3, 6)}, 1, 0.5);
    const InputBox box = random_box(rng, 2);
    const Query q(net, box, OutputProperty{random_threshold(rng, net, box)});
    const Verdict v = solve(q, opt);
    EXPECT_EQ(v.stats.audit_violations, 0u);
    pruned += v.stats.pruned;
  }
  EXPECT_GT(pruned, 0u);
}

TEST(Solver, TimeoutIsReported) {
  Rng rng(4);
  const Network net = random_network(rng, 5, {40, 40, 40}, 1);
  const InputBox box(Vector(5, -1.0), Vector(5, 1.0));
  const Interval out = output_bounds(net, box, BoundMethod::Sbt);
  SolverOptions opt;
  opt.deadline = Deadline::after_seconds(1e-9);
  const Verdict v = solve(Query(net, box, OutputProperty{0.5 * (out.lo + out.hi) + 1e3}), opt);
  EXPECT_EQ(v.status, Status::Timeout);
  EXPECT_FALSE(v.witness);
}
