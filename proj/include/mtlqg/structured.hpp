// Structured controller and estimator on a multitree.
//
// Node j keeps z^{F(j)}, an estimate of the states of its funnel F(j), stacked
// in ascending node order. Inputs are u^i = sum_{j in anc(i)} K^{ij} z^{F(j)},
// and every z^{F(j)} follows
//   z+ = A^{FF} z + B^{FF} [u^{anc(j)}; uhat^{sdes(j)}] - L^j (y^{anc(j)} - C^{AA} z^{anc(j)})
// with uhat^{ij} = sum_{a in anc(j)} K^{ia} z^{F(a)}
//                + sum_{b in anc(i) & sdes(j)} K^{ib} E^{b,j} z^{F(j)}.
//
// All routines act on matrices whose columns are a common coordinate system:
// primitive-noise coordinates for exact maps, samples for rollouts, or
// measurement-history coordinates when unrolling into a LinearStrategy.

#pragma once

#include <cstdint>
#include <vector>

#include "mtlqg/lingauss.hpp"
#include "mtlqg/model.hpp"

namespace mtlqg {

struct StructuredGains {
  /// K[t][i][j] : dim u^i x dim x^{F(j)}, meaningful for j in anc(i) only
  /// (other entries are empty).
  std::vector<std::vector<std::vector<Mat>>> K;
  /// L[t][j] : dim x^{F(j)} x dim y^{anc(j)}.
  std::vector<std::vector<Mat>> L;

  static StructuredGains zeros(const ProblemData& problem);
};

/// Throws std::invalid_argument on a horizon or shape mismatch.
void check_gains(const ProblemData& problem, const StructuredGains& gains);

/// Random K with entries uniform in [-scale, scale]; L left at zero.
StructuredGains random_structured_gains(const ProblemData& problem, std::uint64_t seed,
                                        double scale = 0.5);

/// Block pattern of the stacked K_t acting on (z^{F(1)}, ..., z^{F(n)}):
/// entry (i, j) is 1 iff K^{ij}_t has a nonzero entry.
BinaryMatrix gain_block_pattern(const StructuredGains& gains, int t);

class StructuredController {
 public:
  StructuredController(const ProblemData& problem, const StructuredGains& gains);

  int nodes() const { return static_cast<int>(nodes_.size()); }
  const NodeSet& funnel(int j) const { return nodes_[j].funnel; }
  int funnel_dim(int j) const { return nodes_[j].funnel_dim; }

  /// Zero initial estimates with `cols` columns.
  std::vector<Mat> initial(int cols) const;

  /// u^i_t from the current estimates of all nodes.
  Mat control(int t, int i, const std::vector<Mat>& z) const;
  /// Stacked u_t.
  Mat controls(int t, const std::vector<Mat>& z) const;

  /// uhat^{ij}_t; requires i in sdes(j).
  Mat uhat(int t, int j, int i, const std::vector<Mat>& z) const;

  /// A^{FF} z + B^{FF} [u^{anc(j)}; uhat^{sdes(j)}], the update before the
  /// innovation correction. `u` is the stacked u_t.
  Mat predict(int t, int j, const std::vector<Mat>& z, const Mat& u) const;
  /// y^{anc(j)}_t - C^{AA} z^{anc(j)}_t. `y` is the stacked y_t.
  Mat innovation(int t, int j, const std::vector<Mat>& z, const Mat& y) const;

  /// z^{F(j)}_{t+1}.
  Mat estimator_step(int t, int j, const std::vector<Mat>& z, const Mat& u, const Mat& y) const;
  /// All nodes at once.
  std::vector<Mat> advance(int t, const std::vector<Mat>& z, const Mat& u, const Mat& y) const;

  const StructuredGains& gains() const { return gains_; }
  StructuredGains& mutable_gains() { return gains_; }

 private:
  struct NodeData {
    NodeSet anc, sdes, funnel;
    int funnel_dim = 0;
    int anc_dim = 0;  // x^{anc(j)} is the leading block of x^{F(j)}
    std::vector<Mat> embed;  // E^{b,j} indexed by b (empty unless b in sdes(j))
  };
  struct StepCache {
    std::vector<Mat> AFF, BFF, CAA;
  };

  const ProblemData& problem_;
  StructuredGains gains_;
  BlockLayout lx_, lu_, ly_;
  std::vector<NodeData> nodes_;
  std::vector<StepCache> steps_;
};

struct StructuredTrajectory {
  ClosedLoop loop;
  std::vector<std::vector<Mat>> z;  // z[t][j], t = 0..T
};

/// Runs plant and controller together from the given primitive values, whose
/// columns all share one coordinate system: x0 (nx x c), w[t] (nx x c),
/// v[t] (ny x c).
StructuredTrajectory run_structured(const ProblemData& problem, const StructuredController& ctl,
                                    const Mat& x0, const std::vector<Mat>& w,
                                    const std::vector<Mat>& v);

/// Exact maps on the primitive basis.
StructuredTrajectory run_structured(const ProblemData& problem, const StructuredController& ctl,
                                    const PrimitiveBasis& basis);

/// Estimator gains making every z^{F(j)}_t the exact conditional mean of
/// x^{F(j)}_t given y^{anc(j)}_{0:t-1}: at each t, L^j_t regresses the
/// one-step prediction error on the innovation using exact covariances of the
/// closed loop. Returns gains with K copied and L filled in.
StructuredGains fit_estimator_gains(const ProblemData& problem, const StructuredGains& gains);

/// Unrolls the recursions into the equivalent LinearStrategy.
LinearStrategy assemble(const ProblemData& problem, const StructuredGains& gains);

}  // namespace mtlqg
