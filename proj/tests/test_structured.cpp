#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mtlqg/centralized.hpp"
#include "mtlqg/structured.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;
using mtlqg::testing::simple_problem;

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(Structured, SingleNodeIsKalmanPredictor) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ProblemData p = make_instance("single", 1, 4, seed).problem;
    const StructuredGains g = fit_estimator_gains(p, random_structured_gains(p, seed + 100));
    const KalmanSolution k = solve_kalman(p);
    for (int t = 0; t < p.horizon; ++t) EXPECT_LT(max_abs(g.L[t][0] - k.L[t]), 1e-10);
  }
}

TEST(Structured, GainPatternIsSparsity) {
  const ProblemData p = random_instance(five_node_dag(), {{1, 2, 1, 1, 1}, {1, 1, 2, 1, 1}, {1, 1, 1, 1, 1}}, 3, 2);
  const StructuredGains g = random_structured_gains(p, 7);
  for (int t = 0; t < p.horizon; ++t) EXPECT_EQ(gain_block_pattern(g, t), p.dag.sparsity());
  EXPECT_EQ(g.K[0][2][1].rows(), 2);
  EXPECT_EQ(g.K[0][2][1].cols(), 2 + 1 + 1 + 1);  // x^{2,3,4,5}
  EXPECT_EQ(g.K[0][0][2].size(), 0);
}

TEST(Structured, CheckGainsRejectsMismatch) {
  const ProblemData p = random_instance(four_node_dag(), uniform_dims(4, 1, 1, 1), 2, 2);
  StructuredGains g = random_structured_gains(p, 1);
  EXPECT_NO_THROW(check_gains(p, g));
  g.K[1][2][1] = Mat::Zero(2, 2);
  EXPECT_THROW(check_gains(p, g), std::invalid_argument);
  StructuredGains h = random_structured_gains(p, 1);
  h.L.pop_back();
  EXPECT_THROW(check_gains(p, h), std::invalid_argument);
}

TEST(Structured, UhatNeedsStrictDescendant) {
  const ProblemData p = random_instance(four_node_dag(), uniform_dims(4, 1, 1, 1), 2, 2);
  const StructuredController ctl(p, random_structured_gains(p, 1));
  const auto z = ctl.initial(1);
  EXPECT_NO_THROW(ctl.uhat(0, 1, 2, z));
  EXPECT_THROW(ctl.uhat(0, 2, 1, z), std::invalid_argument);
  EXPECT_THROW(ctl.uhat(0, 2, 2, z), std::invalid_argument);
}

TEST(Structured, FittedEstimatesAreConditionalMeans) {
  const ProblemData p = random_instance(four_node_dag(), {{2, 1, 1, 2}, {1, 2, 1, 1}, {1, 1, 2, 1}}, 4, 8);
  const StructuredGains g = fit_estimator_gains(p, random_structured_gains(p, 3));
  const PrimitiveBasis b(p);
  const StructuredTrajectory tr = run_structured(p, StructuredController(p, g), b);
  const auto rel = all_relations(p.dag);
  const BlockLayout lx = p.x_layout();
  for (int t = 1; t <= p.horizon; ++t) {
    for (int j = 0; j < 4; ++j) {
      const Conditioning c = condition(b, sub_rows(tr.loop.x[t], lx, rel[j].funnel),
                                       history(p, tr.loop.y, t, rel[j].anc, b.dim()));
      EXPECT_LT(max_abs(c.estimate - tr.z[t][j]), 1e-10) << "t " << t << " j " << j;
    }
  }
}

TEST(Structured, WithoutFittingEstimatesAreWrong) {
  const ProblemData p = random_instance(four_node_dag(), uniform_dims(4, 1, 1, 1), 3, 8);
  const StructuredGains g = random_structured_gains(p, 3);  // L = 0
  const PrimitiveBasis b(p);
  const StructuredTrajectory tr = run_structured(p, StructuredController(p, g), b);
  const auto rel = all_relations(p.dag);
  const Conditioning c = condition(b, sub_rows(tr.loop.x[2], p.x_layout(), rel[0].funnel),
                                   history(p, tr.loop.y, 2, rel[0].anc, b.dim()));
  EXPECT_GT(max_abs(c.estimate - tr.z[2][0]), 1e-3);
}

TEST(Structured, NoMeasurementsMeansNoCorrection) {
  ProblemData p = simple_problem(chain_dag(2), uniform_dims(2, 1, 1, 1), 3);
  for (StepData& s : p.steps) s.C.setZero();
  const StructuredGains g = fit_estimator_gains(p, random_structured_gains(p, 5));
  for (int t = 0; t < p.horizon; ++t) {
    for (int j = 0; j < 2; ++j) EXPECT_LT(max_abs(g.L[t][j]), 1e-12);
  }
  const Instance inst{"chain", 0, p};
  const ExperimentReport r = run_theorem2(inst, 5);
  EXPECT_TRUE(r.pass());
}

TEST(Structured, AssembledStrategyReproducesLoop) {
  const ProblemData p = random_instance(five_node_dag(), {{1, 2, 1, 1, 2}, {1, 1, 2, 1, 1}, {2, 1, 1, 1, 1}}, 4, 5);
  const StructuredGains g = fit_estimator_gains(p, random_structured_gains(p, 6));
  const PrimitiveBasis b(p);
  const StructuredTrajectory tr = run_structured(p, StructuredController(p, g), b);
  const LinearStrategy f = assemble(p, g);
  EXPECT_NO_THROW(check_strategy(p, f));
  const ClosedLoop loop = propagate(p, b, f);
  for (int t = 0; t < p.horizon; ++t) EXPECT_LT(max_abs(loop.u[t] - tr.loop.u[t]), 1e-10);
}
