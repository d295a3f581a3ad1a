// Classical finite-horizon LQG with full information sharing, and the
// reduction of the six-node single-decision-maker problem to a centralized
// problem on the center's funnel.

#pragma once

#include <stdexcept>
#include <vector>

#include "mtlqg/lingauss.hpp"
#include "mtlqg/model.hpp"

namespace mtlqg {

class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, int t) : std::runtime_error(what), time(t) {}
  int time;
};

struct RiccatiSolution {
  std::vector<Mat> P;  // t = 0..T, P[T] = P_final
  std::vector<Mat> K;  // t = 0..T-1, u_t = K_t x_t
};

struct KalmanSolution {
  std::vector<Mat> Sigma;  // predictor error covariance, t = 0..T
  std::vector<Mat> L;      // z_+ = A z + B u - L (y - C z)
};

/// Backward Riccati recursion over the stacked problem, with the cross term S:
///   M_t = R + B^T P_{t+1} B
///   K_t = -M_t^{-1} (B^T P_{t+1} A + S^T)
///   P_t = Q + A^T P_{t+1} A - (A^T P_{t+1} B + S) M_t^{-1} (B^T P_{t+1} A + S^T)
/// Throws SingularityError when M_t is not positive definite.
RiccatiSolution solve_lqr(const ProblemData& problem);

/// Forward predictor recursion z_t = E[x_t | y_{0:t-1}, u_{0:t-1}] with the
/// w/v cross-covariance U = E[v w^T]:
///   N_t = C Sigma_t C^T + V
///   L_t = -(A Sigma_t C^T + U^T) N_t^{-1}
///   Sigma_{t+1} = A Sigma_t A^T + W - (A Sigma_t C^T + U^T) N_t^{-1} (A Sigma_t C^T + U^T)^T
/// Throws SingularityError when N_t is singular.
KalmanSolution solve_kalman(const ProblemData& problem);

/// Optimal expected cost from the two recursions:
///   tr(P_0 Sigma_init) + sum_t tr(P_{t+1} W_t) + sum_t tr(K_t^T M_t K_t Sigma_t).
double optimal_cost(const ProblemData& problem, const RiccatiSolution& lqr,
                    const KalmanSolution& kalman);

/// Closed-loop maps of the certainty-equivalent controller u_t = K_t z_t.
/// Uses centralized information: it is feasible for the decentralized
/// problem only when n = 1.
ClosedLoop centralized_closed_loop(const ProblemData& problem, const PrimitiveBasis& basis,
                                   const RiccatiSolution& lqr, const KalmanSolution& kalman,
                                   std::vector<AffineNoiseMap>* estimates = nullptr);

/// Subsystem on `nodes` (a single stacked node) taking the sub-blocks of every
/// matrix.
ProblemData restrict_to(const ProblemData& problem, const NodeSet& nodes);

/// Collapse all nodes into one (same stacked matrices, single-node DAG).
ProblemData as_centralized(const ProblemData& problem);

struct SixNodeReduction {
  ProblemData reduced;  // single node with state (x^1, x^3, x^5), input u^3, output y^3
  double constant = 0.0;
};

/// Requires a six-node problem whose graph has the aggregated sparsity, where
/// only node 3 has inputs and measurements and A2 holds. The cost of any
/// node-3 strategy equals `constant` plus the cost of the same strategy in
/// `reduced`. Throws std::invalid_argument with pattern diagnostics.
SixNodeReduction six_node_reduce(const ProblemData& problem);

}  // namespace mtlqg
