#include "mtlqg/oracle.hpp"

#include <cmath>
#include <string>

#include "mtlqg/linalg.hpp"

namespace mtlqg {

namespace {

// G[t][s] = Phi(t, s+1) B_s for s < t <= T: response of x_t to u_s.
std::vector<std::vector<Mat>> input_responses(const ProblemData& p) {
  const int T = p.horizon;
  std::vector<std::vector<Mat>> g(T + 1);
  for (int s = 0; s < T; ++s) {
    Mat m = p.steps[s].B;
    for (int t = s + 1; t <= T; ++t) {
      g[t].resize(T);
      g[t][s] = m;
      if (t < T) m = p.steps[t].A * m;
    }
  }
  return g;
}

struct Param {
  int t, s, row, col;  // row/col inside Theta_{t,s}
};

std::vector<Param> free_parameters(const ProblemData& p) {
  std::vector<Param> out;
  const BlockLayout lu = p.u_layout(), ly = p.y_layout();
  const BinaryMatrix& S = p.dag.sparsity();
  std::vector<int> unode, ynode;
  for (int i = 0; i < p.dag.size(); ++i) {
    unode.insert(unode.end(), lu.dim(i), i);
    ynode.insert(ynode.end(), ly.dim(i), i);
  }
  for (int t = 0; t < p.horizon; ++t) {
    for (int s = 0; s < t; ++s) {
      for (int a = 0; a < p.nu(); ++a) {
        for (int b = 0; b < p.ny(); ++b) {
          if (S(unode[a], ynode[b])) out.push_back({t, s, a, b});
        }
      }
    }
  }
  return out;
}

}  // namespace

PurifiedBasis purify(const ProblemData& p, const PrimitiveBasis& basis) {
  PurifiedBasis out;
  out.xfree.push_back(basis.x0());
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    out.eta.push_back(s.C * out.xfree[t] + basis.v(t));
    out.xfree.push_back(s.A * out.xfree[t] + basis.w(t));
  }
  return out;
}

OracleStrategy OracleStrategy::zeros(const ProblemData& p) {
  OracleStrategy o;
  o.theta = LinearStrategy::zeros(p).gain;
  return o;
}

long long oracle_parameter_count(const ProblemData& p) {
  const BlockLayout lu = p.u_layout(), ly = p.y_layout();
  const BinaryMatrix& S = p.dag.sparsity();
  long long per_pair = 0;
  for (int i = 0; i < p.dag.size(); ++i) {
    for (int j = 0; j < p.dag.size(); ++j) {
      if (S(i, j)) per_pair += static_cast<long long>(lu.dim(i)) * ly.dim(j);
    }
  }
  const long long pairs = static_cast<long long>(p.horizon) * (p.horizon - 1) / 2;
  return per_pair * pairs;
}

OracleQuadratic oracle_quadratic(const ProblemData& p, const PrimitiveBasis& basis) {
  const int T = p.horizon, nx = p.nx(), nu = p.nu(), ny = p.ny();
  const PurifiedBasis pb = purify(p, basis);
  const auto g = input_responses(p);

  const AffineNoiseMap X = stack(pb.xfree, basis.dim());
  const AffineNoiseMap H = stack(pb.eta, basis.dim());
  Mat Bc = Mat::Zero((T + 1) * nx, T * nu);
  Mat Qc = Mat::Zero((T + 1) * nx, (T + 1) * nx);
  Mat Sc = Mat::Zero((T + 1) * nx, T * nu);
  Mat Rc = Mat::Zero(T * nu, T * nu);
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < t; ++s) Bc.block(t * nx, s * nu, nx, nu) = g[t][s];
    if (t < T) {
      Qc.block(t * nx, t * nx, nx, nx) = p.steps[t].Q;
      Sc.block(t * nx, t * nu, nx, nu) = p.steps[t].S;
      Rc.block(t * nu, t * nu, nu, nu) = p.steps[t].R;
    }
  }
  Qc.block(T * nx, T * nx, nx, nx) = p.p_final;
  const Mat Nc = Qc * Bc + Sc;
  const Mat BtS = Bc.transpose() * Sc;
  const Mat Pc = Bc.transpose() * Qc * Bc + BtS + BtS.transpose() + Rc;
  const Mat cxx = cov(basis, X, X);
  const Mat cxh = cov(basis, X, H);
  const Mat chh = cov(basis, H, H);
  const Mat lin = Nc.transpose() * cxh;

  const auto params = free_parameters(p);
  const int m = static_cast<int>(params.size());
  OracleQuadratic q;
  q.constant = (Qc.cwiseProduct(cxx)).sum();
  q.linear.resize(m);
  q.hessian.resize(m, m);
  std::vector<int> ra(m), cb(m);
  for (int k = 0; k < m; ++k) {
    ra[k] = params[k].t * nu + params[k].row;
    cb[k] = params[k].s * ny + params[k].col;
    q.linear(k) = lin(ra[k], cb[k]);
  }
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) q.hessian(k, l) = Pc(ra[k], ra[l]) * chh(cb[k], cb[l]);
  }
  return q;
}

Vec flatten(const ProblemData& p, const OracleStrategy& o) {
  const auto params = free_parameters(p);
  Vec v(params.size());
  for (size_t k = 0; k < params.size(); ++k) {
    const Param& q = params[k];
    v(k) = o.theta[q.t][q.s](q.row, q.col);
  }
  return v;
}

OracleStrategy unflatten(const ProblemData& p, const Vec& theta) {
  const auto params = free_parameters(p);
  if (static_cast<size_t>(theta.size()) != params.size()) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(params.size()) +
                                " parameters, got " + std::to_string(theta.size()));
  }
  OracleStrategy o = OracleStrategy::zeros(p);
  for (size_t k = 0; k < params.size(); ++k) {
    const Param& q = params[k];
    o.theta[q.t][q.s](q.row, q.col) = theta(k);
  }
  return o;
}

OracleSolution solve_oracle(const ProblemData& p, const OracleOptions& options) {
  require_valid(p);
  OracleSolution sol;
  sol.parameters = oracle_parameter_count(p);
  if (sol.parameters > kOracleParameterLimit && !options.force) {
    throw GuardrailError("oracle needs " + std::to_string(sol.parameters) +
                             " parameters, above the limit of " +
                             std::to_string(kOracleParameterLimit) + " (use --force to override)",
                         sol.parameters);
  }
  const PrimitiveBasis basis(p);
  const OracleQuadratic q = oracle_quadratic(p, basis);
  const Eigen::Index m = q.linear.size();
  Vec theta = Vec::Zero(m);
  sol.rcond = 1.0;
  if (m > 0) {
    sol.hessian_norm = q.hessian.cwiseAbs().rowwise().sum().maxCoeff();
    Eigen::LLT<Mat> llt(q.hessian);
    const bool ok = llt.info() == Eigen::Success;
    sol.rcond = ok ? llt.rcond() : 0.0;
    if (ok && sol.rcond > 1e-12) {
      theta = -llt.solve(q.linear);
    } else {
      // Minimum-norm minimizer on the range of the Hessian.
      sol.pseudo_inverse = true;
      theta = -psd_pinv(q.hessian) * q.linear;
    }
    sol.gradient_norm = (2.0 * (q.linear + q.hessian * theta)).norm();
  }
  sol.strategy = unflatten(p, theta);
  sol.cost = exact_cost(p, basis, oracle_closed_loop(p, basis, sol.strategy));
  return sol;
}

ClosedLoop oracle_closed_loop(const ProblemData& p, const PrimitiveBasis& basis,
                              const OracleStrategy& o) {
  const PurifiedBasis pb = purify(p, basis);
  ClosedLoop loop;
  loop.x.push_back(basis.x0());
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    AffineNoiseMap u = Mat::Zero(p.nu(), basis.dim());
    for (int r = 0; r < t; ++r) u.noalias() += o.theta[t][r] * pb.eta[r];
    loop.u.push_back(std::move(u));
    loop.y.push_back(s.C * loop.x[t] + basis.v(t));
    loop.x.push_back(s.A * loop.x[t] + s.B * loop.u[t] + basis.w(t));
  }
  return loop;
}

namespace {

// Shared shape of both conversions: u_t = sum_{s<t} F_{t,s} a_s with
// a_s = e_s + sign * C_s sum_{r<s} G[s][r] u_r, written in a_s coordinates
// when `from` is the gain on a, producing the gain on e.
std::vector<std::vector<Mat>> convert(const ProblemData& p,
                                      const std::vector<std::vector<Mat>>& from, double sign) {
  const int T = p.horizon, ny = p.ny(), nu = p.nu();
  const int cols = T * ny;
  const auto g = input_responses(p);
  std::vector<Mat> u, a;
  std::vector<std::vector<Mat>> out = LinearStrategy::zeros(p).gain;
  for (int t = 0; t < T; ++t) {
    Mat ut = Mat::Zero(nu, cols);
    for (int s = 0; s < t; ++s) ut.noalias() += from[t][s] * a[s];
    for (int s = 0; s < t; ++s) out[t][s] = ut.middleCols(s * ny, ny);
    u.push_back(ut);
    Mat at = Mat::Zero(ny, cols);
    at.middleCols(t * ny, ny).setIdentity();
    for (int r = 0; r < t; ++r) at.noalias() += sign * (p.steps[t].C * g[t][r]) * u[r];
    a.push_back(std::move(at));
  }
  return out;
}

}  // namespace

LinearStrategy to_linear_strategy(const ProblemData& p, const OracleStrategy& o) {
  // eta_s = y_s - C_s sum_{r<s} G[s][r] u_r.
  LinearStrategy s;
  s.gain = convert(p, o.theta, -1.0);
  return s;
}

OracleStrategy from_linear_strategy(const ProblemData& p, const LinearStrategy& strategy) {
  check_strategy(p, strategy);
  // y_s = eta_s + C_s sum_{r<s} G[s][r] u_r.
  OracleStrategy o;
  o.theta = convert(p, strategy.gain, 1.0);
  return o;
}

std::vector<std::vector<AffineNoiseMap>> exact_estimates(const ProblemData& p,
                                                         const PrimitiveBasis& basis,
                                                         const ClosedLoop& loop) {
  const auto rel = all_relations(p.dag);
  const BlockLayout lx = p.x_layout();
  std::vector<std::vector<AffineNoiseMap>> z(loop.x.size());
  for (size_t t = 0; t < loop.x.size(); ++t) {
    const int hist = std::min<int>(static_cast<int>(t), p.horizon);
    for (int j = 0; j < p.dag.size(); ++j) {
      const AffineNoiseMap target = sub_rows(loop.x[t], lx, rel[j].funnel);
      const AffineNoiseMap given = history(p, loop.y, hist, rel[j].anc, basis.dim());
      if (given.rows() == 0) {
        z[t].push_back(Mat::Zero(target.rows(), basis.dim()));
      } else {
        z[t].push_back(condition(basis, target, given).estimate);
      }
    }
  }
  return z;
}

}  // namespace mtlqg
