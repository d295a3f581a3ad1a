// Problem data for finite-horizon LQG on a DAG, structural validation and the
// A1/A2/A2' assumption checkers.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtlqg/graph.hpp"

namespace mtlqg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Offsets of per-node blocks inside a stacked vector.
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<int> dims);

  int nodes() const { return static_cast<int>(dims_.size()); }
  int dim(int node) const { return dims_[node]; }
  int offset(int node) const { return offsets_[node]; }
  int total() const { return offsets_.back(); }
  int total(const NodeSet& s) const;
  const std::vector<int>& dims() const { return dims_; }

  /// Row indices of the nodes in `s`, in ascending node order.
  std::vector<int> indices(const NodeSet& s) const;

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_{0};
};

/// Rows/cols of m picked by node sets.
Mat sub_block(const Mat& m, const BlockLayout& rows, const NodeSet& row_nodes,
              const BlockLayout& cols, const NodeSet& col_nodes);
Mat sub_rows(const Mat& m, const BlockLayout& rows, const NodeSet& row_nodes);

/// Block (i, j) of m.
inline auto block(const Mat& m, const BlockLayout& rows, int i, const BlockLayout& cols, int j) {
  return m.block(rows.offset(i), cols.offset(j), rows.dim(i), cols.dim(j));
}

struct Dims {
  std::vector<int> x, u, y;
};

/// Matrices for one time step, all stacked over nodes.
/// Cost summand: [x;u]^T [[Q, S],[S^T, R]] [x;u].
/// Noise: cov([w;v]) = [[W, U^T],[U, V]], so U = E[v w^T] (ny x nx).
struct StepData {
  Mat A, B, C;
  Mat Q, R, S;
  Mat W, V, U;
};

struct ProblemData {
  Dag dag;
  int horizon = 0;
  Dims dims;
  std::vector<StepData> steps;  // t = 0..horizon-1
  Mat sigma_init;
  Mat p_final;

  BlockLayout x_layout() const { return BlockLayout(dims.x); }
  BlockLayout u_layout() const { return BlockLayout(dims.u); }
  BlockLayout y_layout() const { return BlockLayout(dims.y); }
  int nx() const;
  int nu() const;
  int ny() const;

  /// All-zero problem with the right shapes.
  static ProblemData zeros(Dag dag, Dims dims, int horizon);
};

struct Diagnostic {
  std::string matrix;  // "A", "Q", "cost", "noise", ...
  int i = -1;          // 0-based block row node, -1 when not block specific
  int j = -1;
  int t = -1;          // -1 for time-invariant data (sigma_init, p_final)
  std::string message;

  std::string describe() const;
};

/// Full list of violated ProblemData invariants; empty means valid.
std::vector<Diagnostic> validate(const ProblemData& problem);

/// Throws std::invalid_argument carrying every diagnostic.
void require_valid(const ProblemData& problem);

struct PairClass {
  bool common_ancestor = false;
  bool common_descendant = false;
  bool decoupled_cost = false;
  bool uncorrelated_noise = false;
};

struct AssumptionViolation {
  int i = 0;
  int j = 0;
  std::string matrix;  // for A2: "Q", "R", "S", "P_final", "W", "V", "U", "Sigma_init"
  int t = -1;
  std::string requirement;  // "decoupled cost", "uncorrelated noise", "decoupled cost or uncorrelated noise"
};

struct AssumptionReport {
  bool a1 = false;
  std::optional<Diamond> diamond;
  bool a2 = false;
  std::vector<AssumptionViolation> a2_violations;
  bool a2prime = false;
  std::vector<AssumptionViolation> a2prime_violations;
  /// pairs[i][j], symmetric.
  std::vector<std::vector<PairClass>> pairs;
  /// Non-relative split per node, feeding the modified aggregation.
  std::vector<NonrelativeSplit> splits;
  BinaryMatrix noise_mask;  // pattern of S S^T
  BinaryMatrix cost_mask;   // pattern of S^T S
};

/// Pattern of S S^T (common ancestor) and S^T S (common descendant).
BinaryMatrix common_ancestor_mask(const BinaryMatrix& s);
BinaryMatrix common_descendant_mask(const BinaryMatrix& s);

/// Pair classification with |entry| <= zero_tol treated as zero.
std::vector<std::vector<PairClass>> classify_pairs(const ProblemData& problem, double zero_tol = 0.0);

void check_a2(const ProblemData& problem, AssumptionReport& report, double zero_tol = 0.0);
void check_a2prime(const ProblemData& problem, AssumptionReport& report, double zero_tol = 0.0);

/// A1 + A2 + A2' in one report.
AssumptionReport check_assumptions(const ProblemData& problem, double zero_tol = 0.0);

/// Node j with k in N_c(j), m in N_b(j) and k an ancestor of m. A2' can
/// hold pair by pair while the optimal u^j still uses y^j to estimate x^m.
struct CrossCoupling {
  int j = 0, k = 0, m = 0;
};
std::optional<CrossCoupling> find_cross_coupling(const ProblemData& problem, const AssumptionReport& report);

enum class InstanceMode { kA2, kA2Prime };

struct InstanceOptions {
  InstanceMode mode = InstanceMode::kA2;
  double dynamics_scale = 0.6;    // entries of A drawn from [-s, s] (diagonal blocks shifted)
  double input_scale = 1.0;       // entries of B and C
  double definiteness = 0.1;      // multiple of I added to cost, noise and Sigma_init
  double coupling_probability = 0.5;  // A2' mode: chance a non-relative pair is coupled
};

/// Pseudorandom instance conforming to S that passes validate and the
/// requested assumption, with strictly definite R, noise and Sigma_init.
/// Deterministic in (dag, dims, horizon, seed, options).
ProblemData random_instance(const Dag& dag, const Dims& dims, int horizon, std::uint64_t seed,
                            const InstanceOptions& options = {});

/// Uniform dims: every node gets (dx, du, dy).
Dims uniform_dims(int n, int dx, int du, int dy);

}  // namespace mtlqg
