// Exact linear-Gaussian calculus.
//
// Every closed-loop quantity is a zero-mean Gaussian vector written as M p,
// where p = (x0, w0, v0, ..., w_{T-1}, v_{T-1}) is the primitive random
// vector. An AffineNoiseMap is the coefficient matrix M (one column per
// entry of p). Covariances, conditional expectations and expected costs are
// then plain matrix algebra against cov(p).

#pragma once

#include <vector>

#include "mtlqg/model.hpp"

namespace mtlqg {

using AffineNoiseMap = Mat;

class PrimitiveBasis {
 public:
  PrimitiveBasis() = default;
  explicit PrimitiveBasis(const ProblemData& problem);

  int dim() const { return dim_; }
  int horizon() const { return horizon_; }
  int x0_offset() const { return 0; }
  int w_offset(int t) const { return nx_ + t * (nx_ + ny_); }
  int v_offset(int t) const { return w_offset(t) + nx_; }

  /// Block-diagonal covariance of p.
  const Mat& covariance() const { return cov_; }
  /// F with F F^T = cov(p), for sampling.
  const Mat& factor() const { return factor_; }

  /// Selector maps for the primitive segments.
  AffineNoiseMap x0() const;
  AffineNoiseMap w(int t) const;
  AffineNoiseMap v(int t) const;

 private:
  int nx_ = 0, ny_ = 0, horizon_ = 0, dim_ = 0;
  Mat cov_, factor_;
};

/// u_t = sum_{s<t} gain[t][s] y_s, with block (i, j) of gain[t][s] zero
/// unless j is an ancestor of i.
struct LinearStrategy {
  std::vector<std::vector<Mat>> gain;  // gain[t][s], s < t; nu x ny

  static LinearStrategy zeros(const ProblemData& problem);
};

/// Throws std::invalid_argument on shape mismatch or a nonzero gain block that
/// would give node i access to a non-ancestor's measurements.
void check_strategy(const ProblemData& problem, const LinearStrategy& strategy);

/// Random strategy with ancestral sparsity; entries uniform in [-scale, scale].
LinearStrategy random_strategy(const ProblemData& problem, std::uint64_t seed, double scale = 0.3);

struct ClosedLoop {
  std::vector<AffineNoiseMap> x;  // t = 0..T
  std::vector<AffineNoiseMap> u;  // t = 0..T-1
  std::vector<AffineNoiseMap> y;  // t = 0..T-1
};

/// Exact closed-loop maps. Timing: x_t, then u_t (from y_{0:t-1}), then y_t.
ClosedLoop propagate(const ProblemData& problem, const PrimitiveBasis& basis,
                     const LinearStrategy& strategy);

/// Stacks rows of several maps into one.
AffineNoiseMap stack(const std::vector<AffineNoiseMap>& maps, int basis_dim);

/// Rows of the y-history y_{0:t-1} restricted to nodes in `nodes`.
AffineNoiseMap history(const ProblemData& problem, const std::vector<AffineNoiseMap>& y, int t,
                       const NodeSet& nodes, int basis_dim);

/// cov(a, b) = M_a cov(p) M_b^T.
Mat cov(const PrimitiveBasis& basis, const AffineNoiseMap& a, const AffineNoiseMap& b);

struct Conditioning {
  Mat gain;                  // E[target | given] = gain * given
  AffineNoiseMap estimate;   // gain * M_given
  AffineNoiseMap residual;   // target - estimate, uncorrelated with given
};

/// Least squares on the whitened maps M F (F F^T = cov(p)) by SVD, so the
/// rank decision sees singular values rather than their squares.
Conditioning condition(const PrimitiveBasis& basis, const AffineNoiseMap& target,
                       const AffineNoiseMap& given);

/// Expected quadratic cost of the closed loop.
double exact_cost(const ProblemData& problem, const PrimitiveBasis& basis, const ClosedLoop& loop);

/// sqrt(trace cov(e) / max(trace cov(target), eps)) for the residual e of the
/// joint projection of target onto the stacked regressors.
double projection_residual(const PrimitiveBasis& basis, const AffineNoiseMap& target,
                           const std::vector<AffineNoiseMap>& regressors, double eps = 1e-24);

}  // namespace mtlqg
