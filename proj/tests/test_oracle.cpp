#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mtlqg/centralized.hpp"
#include "mtlqg/oracle.hpp"
#include "mtlqg/rng.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;
using mtlqg::testing::simple_problem;

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(Oracle, SingleNodeMatchesRiccati) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const ProblemData p = make_instance("single", 1, 2 + seed % 4, seed).problem;
    const OracleSolution sol = solve_oracle(p);
    const double j = optimal_cost(p, solve_lqr(p), solve_kalman(p));
    EXPECT_NEAR(sol.cost / j, 1.0, 1e-8);
    EXPECT_TRUE(sol.certified());
  }
}

TEST(Oracle, ZeroInputMatrixGivesUncontrolledCost) {
  ProblemData p = random_instance(four_node_dag(), uniform_dims(4, 1, 1, 1), 3, 4);
  for (StepData& s : p.steps) {
    s.B.setZero();
    s.S.setZero();  // otherwise inputs still pay off through the cross term
  }
  const OracleSolution sol = solve_oracle(p);
  const PrimitiveBasis b(p);
  const double open = exact_cost(p, b, propagate(p, b, LinearStrategy::zeros(p)));
  EXPECT_NEAR(sol.cost / open, 1.0, 1e-12);
  EXPECT_LT(max_abs(flatten(p, sol.strategy)), 1e-12);
}

TEST(Oracle, QuadraticMatchesExactCost) {
  const ProblemData p = random_instance(five_node_dag(), {{1, 2, 1, 1, 1}, {1, 1, 1, 2, 1}, {1, 1, 2, 1, 1}}, 3, 11);
  const PrimitiveBasis b(p);
  const OracleQuadratic q = oracle_quadratic(p, b);
  ASSERT_EQ(q.linear.size(), oracle_parameter_count(p));
  Rng rng(3);
  Vec theta(q.linear.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) = rng.uniform(-0.5, 0.5);
  const double model = q.constant + 2.0 * q.linear.dot(theta) + theta.dot(q.hessian * theta);
  const double exact = exact_cost(p, b, oracle_closed_loop(p, b, unflatten(p, theta)));
  EXPECT_NEAR(model / exact, 1.0, 1e-10);
  EXPECT_EQ(flatten(p, unflatten(p, theta)), theta);
}

TEST(Oracle, OptimumBeatsRandomStrategies) {
  const ProblemData p = random_instance(chain_dag(3), uniform_dims(3, 1, 1, 1), 4, 12);
  const OracleSolution sol = solve_oracle(p);
  const PrimitiveBasis b(p);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_LE(sol.cost, exact_cost(p, b, propagate(p, b, random_strategy(p, seed))));
  }
  EXPECT_LE(sol.gradient_norm, 1e-8 * (1.0 + sol.hessian_norm));
}

TEST(Oracle, StrategyConversionsRoundTrip) {
  const ProblemData p = random_instance(broadcast_in_dag(3), {{1, 2, 1}, {1, 1, 2}, {2, 1, 1}}, 4, 13);
  const LinearStrategy f = random_strategy(p, 2);
  const OracleStrategy o = from_linear_strategy(p, f);
  const LinearStrategy back = to_linear_strategy(p, o);
  const PrimitiveBasis b(p);
  const ClosedLoop a = propagate(p, b, f), c = oracle_closed_loop(p, b, o);
  for (int t = 0; t < p.horizon; ++t) {
    for (int s = 0; s < t; ++s) EXPECT_LT(max_abs(back.gain[t][s] - f.gain[t][s]), 1e-12);
    EXPECT_LT(max_abs(a.u[t] - c.u[t]), 1e-12);
  }
  // The purified parametrization keeps the ancestral sparsity.
  EXPECT_NO_THROW(check_strategy(p, to_linear_strategy(p, o)));
}

TEST(Oracle, Guardrail) {
  const ProblemData p = simple_problem(chain_dag(4), uniform_dims(4, 2, 2, 2), 20);
  EXPECT_GT(oracle_parameter_count(p), kOracleParameterLimit);
  try {
    solve_oracle(p);
    FAIL();
  } catch (const GuardrailError& e) {
    EXPECT_EQ(e.parameters, oracle_parameter_count(p));
  }
}

TEST(Oracle, ParameterCount) {
  // Five-node graph has 11 ancestral pairs; T = 3 gives 3 (t, s) pairs.
  const ProblemData p = simple_problem(five_node_dag(), uniform_dims(5, 1, 1, 1), 3);
  EXPECT_EQ(oracle_parameter_count(p), 11 * 3);
}

TEST(Oracle, ExactEstimatesOnSingleNodeMatchKalman) {
  const ProblemData p = make_instance("single", 1, 3, 5).problem;
  const PrimitiveBasis b(p);
  const RiccatiSolution r = solve_lqr(p);
  const KalmanSolution k = solve_kalman(p);
  std::vector<AffineNoiseMap> z;
  const ClosedLoop loop = centralized_closed_loop(p, b, r, k, &z);
  const auto exact = exact_estimates(p, b, loop);
  for (int t = 0; t <= p.horizon; ++t) EXPECT_LT(max_abs(exact[t][0] - z[t]), 1e-10);
}
