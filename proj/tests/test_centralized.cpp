#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mtlqg/centralized.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;
using mtlqg::testing::simple_problem;

TEST(Centralized, ScalarRiccati) {
  ProblemData p = simple_problem(Dag(1, {}), uniform_dims(1, 1, 1, 1), 1);
  p.steps[0].A(0, 0) = 1.0;
  const RiccatiSolution r = solve_lqr(p);
  EXPECT_NEAR(r.K[0](0, 0), -0.5, 1e-15);
  EXPECT_NEAR(r.P[0](0, 0), 1.5, 1e-15);
  EXPECT_NEAR(r.P[1](0, 0), 1.0, 1e-15);
}

TEST(Centralized, ScalarKalman) {
  ProblemData p = simple_problem(Dag(1, {}), uniform_dims(1, 1, 1, 1), 1);
  p.steps[0].A(0, 0) = 1.0;
  const KalmanSolution k = solve_kalman(p);
  EXPECT_NEAR(k.L[0](0, 0), -0.5, 1e-15);
  EXPECT_NEAR(k.Sigma[1](0, 0), 1.5, 1e-15);
}

TEST(Centralized, CrossTermsEnterBothRecursions) {
  ProblemData p = simple_problem(Dag(1, {}), uniform_dims(1, 1, 1, 1), 1);
  p.steps[0].A(0, 0) = 1.0;
  p.steps[0].S(0, 0) = 0.5;
  p.steps[0].U(0, 0) = 0.5;
  EXPECT_NEAR(solve_lqr(p).K[0](0, 0), -(1.0 + 0.5) / 2.0, 1e-15);
  EXPECT_NEAR(solve_kalman(p).L[0](0, 0), -(1.0 + 0.5) / 2.0, 1e-15);
}

TEST(Centralized, OptimalCostMatchesClosedLoop) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProblemData p = make_instance("single", 1, 2 + seed % 4, seed).problem;
    const RiccatiSolution r = solve_lqr(p);
    const KalmanSolution k = solve_kalman(p);
    const PrimitiveBasis b(p);
    std::vector<AffineNoiseMap> z;
    const ClosedLoop loop = centralized_closed_loop(p, b, r, k, &z);
    const double j = optimal_cost(p, r, k);
    EXPECT_NEAR(exact_cost(p, b, loop) / j, 1.0, 1e-10);
    // The predictor is the exact conditional mean.
    for (int t = 1; t <= p.horizon; ++t) {
      const Conditioning c = condition(b, loop.x[t], history(p, loop.y, t, {0}, b.dim()));
      EXPECT_LT((c.estimate - z[t]).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Centralized, SingularInnovationThrows) {
  ProblemData p = simple_problem(Dag(1, {}), uniform_dims(1, 1, 1, 1), 2);
  p.steps[1].V.setZero();
  p.steps[1].C.setZero();
  try {
    solve_kalman(p);
    FAIL();
  } catch (const SingularityError& e) {
    EXPECT_EQ(e.time, 1);
  }
}

TEST(Centralized, RestrictTo) {
  const ProblemData p = random_instance(five_node_dag(), {{1, 2, 1, 1, 2}, {1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}}, 2, 3);
  const ProblemData q = restrict_to(p, {0, 2, 4});
  EXPECT_EQ(q.dag.size(), 1);
  EXPECT_EQ(q.nx(), 4);
  EXPECT_EQ(q.nu(), 3);
  const BlockLayout lx = p.x_layout();
  EXPECT_EQ(q.steps[1].A, sub_block(p.steps[1].A, lx, {0, 2, 4}, lx, {0, 2, 4}));
  EXPECT_EQ(q.p_final, sub_block(p.p_final, lx, {0, 2, 4}, lx, {0, 2, 4}));
  EXPECT_EQ(as_centralized(p).steps[0].Q, p.steps[0].Q);
}

TEST(Centralized, SixNodeCostSplitsForAnyStrategy) {
  Dims dims{{1, 2, 1, 1, 2, 1}, {0, 0, 1, 0, 0, 0}, {0, 0, 2, 0, 0, 0}};
  const ProblemData p = random_instance(six_node_dag(), dims, 3, 21);
  const SixNodeReduction red = six_node_reduce(p);
  EXPECT_EQ(red.reduced.nx(), 1 + 1 + 2);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    LinearStrategy f = random_strategy(p, seed);
    const double full = exact_cost(p, PrimitiveBasis(p), propagate(p, PrimitiveBasis(p), f));
    const PrimitiveBasis rb(red.reduced);
    const double reduced = exact_cost(red.reduced, rb, propagate(red.reduced, rb, f));
    EXPECT_NEAR((red.constant + reduced) / full, 1.0, 1e-12);
  }
}

TEST(Centralized, SixNodeReduceRejectsOtherStructures) {
  const ProblemData five = random_instance(five_node_dag(), uniform_dims(5, 1, 1, 1), 2, 1);
  EXPECT_THROW(six_node_reduce(five), std::invalid_argument);
  const ProblemData busy = random_instance(six_node_dag(), uniform_dims(6, 1, 1, 1), 2, 1);
  EXPECT_THROW(six_node_reduce(busy), std::invalid_argument);
}
