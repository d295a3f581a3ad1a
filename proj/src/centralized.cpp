#include "mtlqg/centralized.hpp"

#include <sstream>

#include "mtlqg/linalg.hpp"

namespace mtlqg {

namespace {

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

RiccatiSolution solve_lqr(const ProblemData& p) {
  const int T = p.horizon;
  RiccatiSolution sol;
  sol.P.resize(T + 1);
  sol.K.resize(T);
  sol.P[T] = p.p_final;
  for (int t = T - 1; t >= 0; --t) {
    const StepData& s = p.steps[t];
    const Mat& next = sol.P[t + 1];
    const Mat m = symmetrize(s.R + s.B.transpose() * next * s.B);
    const Mat cross = s.B.transpose() * next * s.A + s.S.transpose();  // nu x nx
    Eigen::LLT<Mat> llt(m);
    if (m.rows() > 0 && (llt.info() != Eigen::Success || min_eigenvalue(m) <= 0.0)) {
      throw SingularityError("R + B^T P B is not positive definite at t=" + std::to_string(t), t);
    }
    sol.K[t] = m.rows() > 0 ? Mat(-llt.solve(cross)) : Mat::Zero(0, s.A.cols());
    sol.P[t] = symmetrize(s.Q + s.A.transpose() * next * s.A + cross.transpose() * sol.K[t]);
  }
  return sol;
}

KalmanSolution solve_kalman(const ProblemData& p) {
  const int T = p.horizon;
  KalmanSolution sol;
  sol.Sigma.resize(T + 1);
  sol.L.resize(T);
  sol.Sigma[0] = p.sigma_init;
  for (int t = 0; t < T; ++t) {
    const StepData& s = p.steps[t];
    const Mat& sig = sol.Sigma[t];
    const Mat innov = symmetrize(s.C * sig * s.C.transpose() + s.V);
    const Mat gain_num = s.A * sig * s.C.transpose() + s.U.transpose();  // nx x ny
    Eigen::LDLT<Mat> ldlt(innov);
    if (innov.rows() > 0 && (ldlt.info() != Eigen::Success || min_eigenvalue(innov) <= 0.0)) {
      throw SingularityError("innovation covariance is singular at t=" + std::to_string(t), t);
    }
    if (innov.rows() > 0) {
      sol.L[t] = -ldlt.solve(gain_num.transpose()).transpose();
    } else {
      sol.L[t] = Mat::Zero(s.A.rows(), 0);
    }
    sol.Sigma[t + 1] =
        symmetrize(s.A * sig * s.A.transpose() + s.W + sol.L[t] * gain_num.transpose());
  }
  return sol;
}

double optimal_cost(const ProblemData& p, const RiccatiSolution& lqr, const KalmanSolution& kf) {
  double j = (lqr.P[0].cwiseProduct(p.sigma_init)).sum();
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    const Mat& next = lqr.P[t + 1];
    j += (next.cwiseProduct(s.W)).sum();
    const Mat m = s.R + s.B.transpose() * next * s.B;
    const Mat lambda = lqr.K[t].transpose() * m * lqr.K[t];
    j += (lambda.cwiseProduct(kf.Sigma[t])).sum();
  }
  return j;
}

ClosedLoop centralized_closed_loop(const ProblemData& p, const PrimitiveBasis& basis,
                                   const RiccatiSolution& lqr, const KalmanSolution& kf,
                                   std::vector<AffineNoiseMap>* estimates) {
  ClosedLoop loop;
  AffineNoiseMap z = Mat::Zero(p.nx(), basis.dim());
  loop.x.push_back(basis.x0());
  if (estimates) estimates->assign(1, z);
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    loop.u.push_back(lqr.K[t] * z);
    loop.y.push_back(s.C * loop.x[t] + basis.v(t));
    loop.x.push_back(s.A * loop.x[t] + s.B * loop.u[t] + basis.w(t));
    z = s.A * z + s.B * loop.u[t] - kf.L[t] * (loop.y[t] - s.C * z);
    if (estimates) estimates->push_back(z);
  }
  return loop;
}

ProblemData restrict_to(const ProblemData& p, const NodeSet& nodes) {
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  Dims dims{{lx.total(nodes)}, {lu.total(nodes)}, {ly.total(nodes)}};
  ProblemData out = ProblemData::zeros(Dag(1, {}), dims, p.horizon);
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    StepData& r = out.steps[t];
    r.A = sub_block(s.A, lx, nodes, lx, nodes);
    r.B = sub_block(s.B, lx, nodes, lu, nodes);
    r.C = sub_block(s.C, ly, nodes, lx, nodes);
    r.Q = sub_block(s.Q, lx, nodes, lx, nodes);
    r.R = sub_block(s.R, lu, nodes, lu, nodes);
    r.S = sub_block(s.S, lx, nodes, lu, nodes);
    r.W = sub_block(s.W, lx, nodes, lx, nodes);
    r.V = sub_block(s.V, ly, nodes, ly, nodes);
    r.U = sub_block(s.U, ly, nodes, lx, nodes);
  }
  out.sigma_init = sub_block(p.sigma_init, lx, nodes, lx, nodes);
  out.p_final = sub_block(p.p_final, lx, nodes, lx, nodes);
  return out;
}

ProblemData as_centralized(const ProblemData& p) {
  NodeSet all(p.dag.size());
  for (int k = 0; k < p.dag.size(); ++k) all[k] = k;
  return restrict_to(p, all);
}

SixNodeReduction six_node_reduce(const ProblemData& p) {
  std::vector<std::string> problems;
  if (p.dag.size() != 6) {
    throw std::invalid_argument("six-node reduction needs exactly 6 nodes, got " +
                                std::to_string(p.dag.size()));
  }
  if (p.dag.sparsity() != six_node_sparsity()) {
    problems.push_back("graph transitive closure differs from the aggregated six-node pattern");
  }
  for (int k = 0; k < 6; ++k) {
    if (k == 2) continue;
    if (p.dims.u[k] != 0) problems.push_back("node " + std::to_string(k + 1) + " has inputs");
    if (p.dims.y[k] != 0) problems.push_back("node " + std::to_string(k + 1) + " has measurements");
  }
  if (problems.empty()) {
    for (const auto& d : validate(p)) problems.push_back(d.describe());
  }
  if (problems.empty()) {
    AssumptionReport report;
    check_a2(p, report);
    for (const auto& v : report.a2_violations) {
      std::ostringstream os;
      os << "A2 violated: pair (" << v.i + 1 << "," << v.j + 1 << ") needs " << v.requirement
         << " but " << v.matrix << (v.t >= 0 ? " at t=" + std::to_string(v.t) : "")
         << " couples them";
      problems.push_back(os.str());
    }
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << "six-node reduction preconditions failed:";
    for (const auto& s : problems) os << "\n  " << s;
    throw std::invalid_argument(os.str());
  }

  SixNodeReduction out;
  out.reduced = restrict_to(p, {0, 2, 4});
  // Everything outside x^{1,3,5} and u^3 contributes a strategy-independent
  // amount, so the gap under the zero strategy is the gap under every strategy.
  const PrimitiveBasis full_basis(p);
  const PrimitiveBasis red_basis(out.reduced);
  const double full = exact_cost(p, full_basis, propagate(p, full_basis, LinearStrategy::zeros(p)));
  const double red = exact_cost(out.reduced, red_basis,
                                propagate(out.reduced, red_basis, LinearStrategy::zeros(out.reduced)));
  out.constant = full - red;
  return out;
}

}  // namespace mtlqg
