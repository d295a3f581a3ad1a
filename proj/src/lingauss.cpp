#include "mtlqg/lingauss.hpp"

#include <cmath>
#include <stdexcept>

#include "mtlqg/linalg.hpp"
#include "mtlqg/rng.hpp"

namespace mtlqg {

PrimitiveBasis::PrimitiveBasis(const ProblemData& p)
    : nx_(p.nx()), ny_(p.ny()), horizon_(p.horizon) {
  dim_ = nx_ + horizon_ * (nx_ + ny_);
  cov_ = Mat::Zero(dim_, dim_);
  factor_ = Mat::Zero(dim_, dim_);
  cov_.topLeftCorner(nx_, nx_) = p.sigma_init;
  factor_.topLeftCorner(nx_, nx_) = psd_factor(p.sigma_init);
  const int m = nx_ + ny_;
  for (int t = 0; t < horizon_; ++t) {
    const StepData& s = p.steps[t];
    Mat joint(m, m);
    joint << s.W, s.U.transpose(), s.U, s.V;
    cov_.block(w_offset(t), w_offset(t), m, m) = joint;
    // One factorization of the joint block keeps the w/v cross term.
    factor_.block(w_offset(t), w_offset(t), m, m) = psd_factor(joint);
  }
}

AffineNoiseMap PrimitiveBasis::x0() const {
  AffineNoiseMap m = Mat::Zero(nx_, dim_);
  m.block(0, 0, nx_, nx_).setIdentity();
  return m;
}

AffineNoiseMap PrimitiveBasis::w(int t) const {
  AffineNoiseMap m = Mat::Zero(nx_, dim_);
  m.block(0, w_offset(t), nx_, nx_).setIdentity();
  return m;
}

AffineNoiseMap PrimitiveBasis::v(int t) const {
  AffineNoiseMap m = Mat::Zero(ny_, dim_);
  m.block(0, v_offset(t), ny_, ny_).setIdentity();
  return m;
}

LinearStrategy LinearStrategy::zeros(const ProblemData& p) {
  LinearStrategy s;
  s.gain.resize(p.horizon);
  for (int t = 0; t < p.horizon; ++t) s.gain[t].assign(t, Mat::Zero(p.nu(), p.ny()));
  return s;
}

void check_strategy(const ProblemData& p, const LinearStrategy& strategy) {
  if (static_cast<int>(strategy.gain.size()) != p.horizon) {
    throw std::invalid_argument("strategy horizon does not match problem");
  }
  const BlockLayout lu = p.u_layout(), ly = p.y_layout();
  const BinaryMatrix& S = p.dag.sparsity();
  for (int t = 0; t < p.horizon; ++t) {
    if (static_cast<int>(strategy.gain[t].size()) != t) {
      throw std::invalid_argument("strategy at t=" + std::to_string(t) + " must have " +
                                  std::to_string(t) + " history gains");
    }
    for (int s = 0; s < t; ++s) {
      const Mat& g = strategy.gain[t][s];
      if (g.rows() != p.nu() || g.cols() != p.ny()) {
        throw std::invalid_argument("strategy gain shape mismatch at t=" + std::to_string(t));
      }
      for (int i = 0; i < p.dag.size(); ++i) {
        for (int j = 0; j < p.dag.size(); ++j) {
          if (S(i, j)) continue;
          auto b = block(g, lu, i, ly, j);
          if (b.size() && b.cwiseAbs().maxCoeff() != 0.0) {
            throw std::invalid_argument("strategy gives node " + std::to_string(i + 1) +
                                        " the measurements of non-ancestor " +
                                        std::to_string(j + 1));
          }
        }
      }
    }
  }
}

LinearStrategy random_strategy(const ProblemData& p, std::uint64_t seed, double scale) {
  Rng rng(seed);
  LinearStrategy s = LinearStrategy::zeros(p);
  const BlockLayout lu = p.u_layout(), ly = p.y_layout();
  const BinaryMatrix& S = p.dag.sparsity();
  for (int t = 0; t < p.horizon; ++t) {
    for (int r = 0; r < t; ++r) {
      for (int i = 0; i < p.dag.size(); ++i) {
        for (int j = 0; j < p.dag.size(); ++j) {
          if (!S(i, j)) continue;
          for (int a = 0; a < lu.dim(i); ++a) {
            for (int b = 0; b < ly.dim(j); ++b) {
              s.gain[t][r](lu.offset(i) + a, ly.offset(j) + b) = rng.uniform(-scale, scale);
            }
          }
        }
      }
    }
  }
  return s;
}

ClosedLoop propagate(const ProblemData& p, const PrimitiveBasis& basis,
                     const LinearStrategy& strategy) {
  check_strategy(p, strategy);
  ClosedLoop loop;
  loop.x.reserve(p.horizon + 1);
  loop.x.push_back(basis.x0());
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    AffineNoiseMap u = Mat::Zero(p.nu(), basis.dim());
    for (int r = 0; r < t; ++r) u.noalias() += strategy.gain[t][r] * loop.y[r];
    loop.u.push_back(std::move(u));
    loop.y.push_back(s.C * loop.x[t] + basis.v(t));
    loop.x.push_back(s.A * loop.x[t] + s.B * loop.u[t] + basis.w(t));
  }
  return loop;
}

AffineNoiseMap stack(const std::vector<AffineNoiseMap>& maps, int basis_dim) {
  int rows = 0;
  for (const auto& m : maps) rows += static_cast<int>(m.rows());
  AffineNoiseMap out(rows, basis_dim);
  int r = 0;
  for (const auto& m : maps) {
    if (m.cols() != basis_dim) throw std::invalid_argument("stack: basis mismatch");
    out.middleRows(r, m.rows()) = m;
    r += static_cast<int>(m.rows());
  }
  return out;
}

AffineNoiseMap history(const ProblemData& p, const std::vector<AffineNoiseMap>& y, int t,
                       const NodeSet& nodes, int basis_dim) {
  const BlockLayout ly = p.y_layout();
  std::vector<AffineNoiseMap> parts;
  parts.reserve(t);
  for (int s = 0; s < t; ++s) parts.push_back(sub_rows(y[s], ly, nodes));
  return stack(parts, basis_dim);
}

Mat cov(const PrimitiveBasis& basis, const AffineNoiseMap& a, const AffineNoiseMap& b) {
  if (a.cols() != basis.dim() || b.cols() != basis.dim()) {
    throw std::invalid_argument("cov: map does not live on this primitive basis");
  }
  return a * basis.covariance() * b.transpose();
}

Conditioning condition(const PrimitiveBasis& basis, const AffineNoiseMap& target,
                       const AffineNoiseMap& given) {
  Conditioning c;
  if (given.rows() == 0) {
    c.gain = Mat::Zero(target.rows(), 0);
  } else {
    Eigen::JacobiSVD<Mat> svd(basis.factor().transpose() * given.transpose(),
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kRankCutoff);
    c.gain = svd.solve(basis.factor().transpose() * target.transpose()).transpose();
  }
  c.estimate = c.gain * given;
  c.residual = target - c.estimate;
  return c;
}

double exact_cost(const ProblemData& p, const PrimitiveBasis& basis, const ClosedLoop& loop) {
  double j = 0.0;
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    const Mat cxx = cov(basis, loop.x[t], loop.x[t]);
    const Mat cxu = cov(basis, loop.x[t], loop.u[t]);
    const Mat cuu = cov(basis, loop.u[t], loop.u[t]);
    // trace([[Q,S],[S^T,R]] [[cxx,cxu],[cux,cuu]])
    j += (s.Q.cwiseProduct(cxx)).sum() + 2.0 * (s.S.cwiseProduct(cxu)).sum() +
         (s.R.cwiseProduct(cuu)).sum();
  }
  const Mat cT = cov(basis, loop.x[p.horizon], loop.x[p.horizon]);
  j += (p.p_final.cwiseProduct(cT)).sum();
  return j;
}

double projection_residual(const PrimitiveBasis& basis, const AffineNoiseMap& target,
                           const std::vector<AffineNoiseMap>& regressors, double eps) {
  const double total = cov(basis, target, target).trace();
  if (regressors.empty()) return total > eps ? 1.0 : 0.0;
  const AffineNoiseMap given = stack(regressors, basis.dim());
  const Conditioning c = condition(basis, target, given);
  const double left = std::max(0.0, cov(basis, c.residual, c.residual).trace());
  return std::sqrt(left / std::max(total, eps));
}

}  // namespace mtlqg
