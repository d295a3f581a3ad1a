#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mtlqg/lingauss.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;
using mtlqg::testing::simple_problem;

namespace {

ProblemData scalar(double a, double c, double sigma0, double w, double v, int horizon = 1) {
  ProblemData p = simple_problem(Dag(1, {}), uniform_dims(1, 1, 1, 1), horizon);
  for (StepData& s : p.steps) {
    s.A(0, 0) = a;
    s.C(0, 0) = c;
    s.W(0, 0) = w;
    s.V(0, 0) = v;
  }
  p.sigma_init(0, 0) = sigma0;
  return p;
}

}  // namespace

TEST(Lingauss, BasisLayout) {
  const ProblemData p = simple_problem(Dag(2, {}), {{2, 1}, {1, 1}, {1, 2}}, 3);
  const PrimitiveBasis b(p);
  EXPECT_EQ(b.dim(), 3 + 3 * (3 + 3));
  EXPECT_EQ(b.w_offset(1), 3 + 6);
  EXPECT_EQ(b.v_offset(1), 3 + 6 + 3);
  EXPECT_EQ(b.covariance().rows(), b.dim());
  EXPECT_NEAR((b.factor() * b.factor().transpose() - b.covariance()).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Lingauss, ScalarConditioning) {
  const ProblemData p = scalar(1.0, 1.0, 2.0, 1.0, 1.0);
  const PrimitiveBasis b(p);
  const AffineNoiseMap y0 = p.steps[0].C * b.x0() + b.v(0);
  const Conditioning c = condition(b, b.x0(), y0);
  EXPECT_NEAR(c.gain(0, 0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(cov(b, c.residual, y0)(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(cov(b, c.residual, c.residual)(0, 0), 2.0 - 4.0 / 3.0, 1e-14);
}

TEST(Lingauss, ZeroStrategyCost) {
  ProblemData p = scalar(0.5, 1.0, 2.0, 0.3, 1.0);
  p.steps[0].Q(0, 0) = 3.0;
  p.p_final(0, 0) = 5.0;
  const PrimitiveBasis b(p);
  const ClosedLoop loop = propagate(p, b, LinearStrategy::zeros(p));
  EXPECT_NEAR(exact_cost(p, b, loop), 3.0 * 2.0 + 5.0 * (0.25 * 2.0 + 0.3), 1e-13);
}

TEST(Lingauss, HistoryStacksAncestorMeasurements) {
  const ProblemData p = random_instance(five_node_dag(), {{1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {1, 2, 1, 1, 1}}, 3, 3);
  const PrimitiveBasis b(p);
  const ClosedLoop loop = propagate(p, b, random_strategy(p, 1));
  const AffineNoiseMap h = history(p, loop.y, 2, {0, 1}, b.dim());
  ASSERT_EQ(h.rows(), 2 * 3);
  EXPECT_EQ(h.row(1), loop.y[0].row(1));
  EXPECT_EQ(h.row(5), loop.y[1].row(2));
  EXPECT_EQ(history(p, loop.y, 0, {0, 1}, b.dim()).rows(), 0);
}

TEST(Lingauss, ProjectionResidual) {
  const ProblemData p = random_instance(Dag(2, {}), uniform_dims(2, 2, 1, 1), 2, 9);
  const PrimitiveBasis b(p);
  const AffineNoiseMap x0 = b.x0();
  EXPECT_NEAR(projection_residual(b, 3.0 * x0.row(0), {x0}), 0.0, 1e-12);
  EXPECT_NEAR(projection_residual(b, b.w(1), {x0}), 1.0, 1e-12);
  EXPECT_EQ(projection_residual(b, b.w(1), {}), 1.0);
  EXPECT_EQ(projection_residual(b, Mat::Zero(1, b.dim()), {}), 0.0);
}

TEST(Lingauss, StrategyChecks) {
  const ProblemData p = simple_problem(five_node_dag(), uniform_dims(5, 1, 1, 1), 3);
  LinearStrategy f = random_strategy(p, 4);
  EXPECT_NO_THROW(check_strategy(p, f));
  f.gain[2][1](0, 2) = 1.0;  // node 1 reading y^3
  EXPECT_THROW(check_strategy(p, f), std::invalid_argument);
  LinearStrategy g = LinearStrategy::zeros(p);
  g.gain.pop_back();
  EXPECT_THROW(check_strategy(p, g), std::invalid_argument);
}
