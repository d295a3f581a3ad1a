// Monte Carlo rollouts of the closed loop under a LinearStrategy or under the
// structured recursions.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "mtlqg/lingauss.hpp"
#include "mtlqg/model.hpp"
#include "mtlqg/rng.hpp"
#include "mtlqg/structured.hpp"

namespace mtlqg {

using Controller = std::variant<LinearStrategy, StructuredGains>;

struct Rollout {
  std::uint64_t seed = 0;
  Vec primitives;      // sample of p
  std::vector<Vec> x;  // t = 0..T
  std::vector<Vec> u;  // t = 0..T-1
  std::vector<Vec> y;  // t = 0..T-1
  double cost = 0.0;
};

/// p = F g with F F^T = cov(p) and g standard normal drawn from rng.
Vec sample_primitives(const PrimitiveBasis& basis, Rng& rng);

/// Realized cost sum_t [x;u]^T [[Q,S],[S^T,R]] [x;u] + x_T^T P_final x_T.
double realized_cost(const ProblemData& problem, const std::vector<Vec>& x,
                     const std::vector<Vec>& u);

/// Forward simulation driven by a given primitive sample.
Rollout rollout_from(const ProblemData& problem, const PrimitiveBasis& basis,
                     const Controller& controller, const Vec& primitives);

/// Forward simulation from Rng(seed).
Rollout rollout(const ProblemData& problem, const PrimitiveBasis& basis,
                const Controller& controller, std::uint64_t seed);

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double std_dev = 0.0;
  int rollouts = 0;
};

/// Rollout k draws from Rng::stream(seed, k). Requires rollouts >= 2.
CostEstimate empirical_cost(const ProblemData& problem, const Controller& controller,
                            int rollouts, std::uint64_t seed);

/// Exact expected cost of a controller.
double controller_cost(const ProblemData& problem, const Controller& controller);

/// One row per (t, node): t,node,x,u,y with the components of each vector
/// separated by spaces; node is 1-based and u, y are empty at t = T.
void write_csv(std::ostream& out, const ProblemData& problem, const Rollout& rollout);

}  // namespace mtlqg
