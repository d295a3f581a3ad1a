// Globally optimal linear decentralized strategy by convex parametrization.
//
// With x~ the control-free state (x~_+ = A x~ + w, x~_0 = x0) and the purified
// outputs eta_t = C_t x~_t + v_t, every admissible linear strategy can be
// written u^i_t = sum_{j in anc(i)} sum_{s<t} Theta^{ij}_{t,s} eta^j_s, and the
// closed loop is affine in Theta. Stacking X = (x_0..x_T), U = (u_0..u_{T-1}),
// H = (eta_0..eta_{T-1}) gives X = X~ + Bc U with Bc_{t,s} = Phi(t, s+1) B_s and
//   J(Theta) = tr(Qc Cov(X~)) + 2 <Nc^T Cov(X~, H), Theta> + <Theta, Pc Theta Cov(H)>
// where Qc = blkdiag(Q_0..Q_{T-1}, P_final), Sc = blkdiag(S_t) padded by a zero
// block row, Rc = blkdiag(R_t), Nc = Qc Bc + Sc and
// Pc = Bc^T Qc Bc + Bc^T Sc + Sc^T Bc + Rc.

#pragma once

#include <stdexcept>
#include <vector>

#include "mtlqg/lingauss.hpp"
#include "mtlqg/model.hpp"

namespace mtlqg {

class GuardrailError : public std::runtime_error {
 public:
  GuardrailError(const std::string& what, long long count)
      : std::runtime_error(what), parameters(count) {}
  long long parameters;
};

inline constexpr long long kOracleParameterLimit = 5000;

struct PurifiedBasis {
  std::vector<AffineNoiseMap> xfree;  // x~_t, t = 0..T
  std::vector<AffineNoiseMap> eta;    // eta_t, t = 0..T-1
};

PurifiedBasis purify(const ProblemData& problem, const PrimitiveBasis& basis);

/// Theta[t][s] (nu x ny, s < t) with ancestral block sparsity.
struct OracleStrategy {
  std::vector<std::vector<Mat>> theta;

  static OracleStrategy zeros(const ProblemData& problem);
};

/// Number of free entries of Theta.
long long oracle_parameter_count(const ProblemData& problem);

/// J(theta) = constant + 2 linear^T theta + theta^T hessian theta over the
/// free entries, listed time-major then row-major.
struct OracleQuadratic {
  double constant = 0.0;
  Vec linear;
  Mat hessian;
};

OracleQuadratic oracle_quadratic(const ProblemData& problem, const PrimitiveBasis& basis);
Vec flatten(const ProblemData& problem, const OracleStrategy& strategy);
OracleStrategy unflatten(const ProblemData& problem, const Vec& theta);

struct OracleOptions {
  bool force = false;  // ignore the parameter-count guardrail
};

struct OracleSolution {
  OracleStrategy strategy;
  double cost = 0.0;           // exact_cost of the optimal closed loop
  double gradient_norm = 0.0;  // Euclidean norm over free entries
  double hessian_norm = 0.0;   // max absolute row sum
  double rcond = 0.0;          // reciprocal condition estimate of the Hessian
  bool pseudo_inverse = false; // Hessian was (numerically) singular
  long long parameters = 0;

  /// gradient_norm <= 1e-8 (1 + hessian_norm).
  bool certified() const { return gradient_norm <= 1e-8 * (1.0 + hessian_norm); }
};

/// Throws GuardrailError when the parameter count exceeds the limit and
/// options.force is not set.
OracleSolution solve_oracle(const ProblemData& problem, const OracleOptions& options = {});

/// u_t = sum_s Theta_{t,s} eta_s, then the plant.
ClosedLoop oracle_closed_loop(const ProblemData& problem, const PrimitiveBasis& basis,
                              const OracleStrategy& strategy);

/// Conversions through the invertible causal map between measurement and
/// purified-output histories.
LinearStrategy to_linear_strategy(const ProblemData& problem, const OracleStrategy& strategy);
OracleStrategy from_linear_strategy(const ProblemData& problem, const LinearStrategy& strategy);

/// z[t][j] = E[x^{F(j)}_t | y^{anc(j)}_{0:t-1}] on the given closed loop.
std::vector<std::vector<AffineNoiseMap>> exact_estimates(const ProblemData& problem,
                                                         const PrimitiveBasis& basis,
                                                         const ClosedLoop& loop);

}  // namespace mtlqg
