#include "mtlqg/structured.hpp"

#include <stdexcept>
#include <string>

#include "mtlqg/linalg.hpp"
#include "mtlqg/rng.hpp"

namespace mtlqg {

namespace {

int funnel_dim(const BlockLayout& lx, const NodeRelations& r) { return lx.total(r.funnel); }

}  // namespace

StructuredGains StructuredGains::zeros(const ProblemData& p) {
  const int n = p.dag.size();
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  const auto rel = all_relations(p.dag);
  StructuredGains g;
  g.K.assign(p.horizon, std::vector<std::vector<Mat>>(n, std::vector<Mat>(n)));
  g.L.assign(p.horizon, std::vector<Mat>(n));
  for (int t = 0; t < p.horizon; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j : rel[i].anc) g.K[t][i][j] = Mat::Zero(lu.dim(i), funnel_dim(lx, rel[j]));
    }
    for (int j = 0; j < n; ++j) {
      g.L[t][j] = Mat::Zero(funnel_dim(lx, rel[j]), ly.total(rel[j].anc));
    }
  }
  return g;
}

void check_gains(const ProblemData& p, const StructuredGains& g) {
  const StructuredGains ref = StructuredGains::zeros(p);
  const int n = p.dag.size();
  if (static_cast<int>(g.K.size()) != p.horizon || static_cast<int>(g.L.size()) != p.horizon) {
    throw std::invalid_argument("gains horizon does not match problem horizon " +
                                std::to_string(p.horizon));
  }
  for (int t = 0; t < p.horizon; ++t) {
    if (static_cast<int>(g.K[t].size()) != n || static_cast<int>(g.L[t].size()) != n) {
      throw std::invalid_argument("gains node count mismatch at t=" + std::to_string(t));
    }
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(g.K[t][i].size()) != n) {
        throw std::invalid_argument("gains node count mismatch at t=" + std::to_string(t));
      }
      for (int j = 0; j < n; ++j) {
        const Mat& k = g.K[t][i][j];
        const Mat& r = ref.K[t][i][j];
        const bool allowed = p.dag.reaches(j, i);
        if (!allowed && k.size() != 0) {
          throw std::invalid_argument("K^{" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                      "} given at t=" + std::to_string(t) + " but node " +
                                      std::to_string(j + 1) + " is not an ancestor of node " +
                                      std::to_string(i + 1));
        }
        if (allowed && (k.rows() != r.rows() || k.cols() != r.cols())) {
          throw std::invalid_argument(
              "K^{" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "} at t=" +
              std::to_string(t) + " should be " + std::to_string(r.rows()) + "x" +
              std::to_string(r.cols()) + ", got " + std::to_string(k.rows()) + "x" +
              std::to_string(k.cols()));
        }
      }
    }
    for (int j = 0; j < n; ++j) {
      const Mat& l = g.L[t][j];
      const Mat& r = ref.L[t][j];
      if (l.rows() != r.rows() || l.cols() != r.cols()) {
        throw std::invalid_argument("L^{" + std::to_string(j + 1) + "} at t=" + std::to_string(t) +
                                    " should be " + std::to_string(r.rows()) + "x" +
                                    std::to_string(r.cols()) + ", got " +
                                    std::to_string(l.rows()) + "x" + std::to_string(l.cols()));
      }
    }
  }
}

StructuredGains random_structured_gains(const ProblemData& p, std::uint64_t seed, double scale) {
  StructuredGains g = StructuredGains::zeros(p);
  Rng rng(seed);
  for (auto& kt : g.K) {
    for (auto& row : kt) {
      for (Mat& k : row) {
        for (Eigen::Index c = 0; c < k.cols(); ++c) {
          for (Eigen::Index r = 0; r < k.rows(); ++r) k(r, c) = rng.uniform(-scale, scale);
        }
      }
    }
  }
  return g;
}

BinaryMatrix gain_block_pattern(const StructuredGains& g, int t) {
  const int n = static_cast<int>(g.K.at(t).size());
  BinaryMatrix out = BinaryMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Mat& k = g.K[t][i][j];
      out(i, j) = k.size() > 0 && k.cwiseAbs().maxCoeff() > 0.0 ? 1 : 0;
    }
  }
  return out;
}

StructuredController::StructuredController(const ProblemData& p, const StructuredGains& g)
    : problem_(p), gains_(g), lx_(p.x_layout()), lu_(p.u_layout()), ly_(p.y_layout()) {
  check_gains(p, g);
  const int n = p.dag.size();
  const auto rel = all_relations(p.dag);
  nodes_.resize(n);
  for (int j = 0; j < n; ++j) {
    NodeData& d = nodes_[j];
    d.anc = rel[j].anc;
    d.sdes = rel[j].sdes;
    d.funnel = rel[j].funnel;
    d.funnel_dim = lx_.total(d.funnel);
    d.anc_dim = lx_.total(d.anc);
    d.embed.resize(n);
    for (int b : d.sdes) d.embed[b] = embedding(p.dag, p.dims.x, b, j);
  }
  steps_.resize(p.horizon);
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    StepCache& c = steps_[t];
    for (int j = 0; j < n; ++j) {
      const NodeData& d = nodes_[j];
      c.AFF.push_back(sub_block(s.A, lx_, d.funnel, lx_, d.funnel));
      c.BFF.push_back(sub_block(s.B, lx_, d.funnel, lu_, d.funnel));
      c.CAA.push_back(sub_block(s.C, ly_, d.anc, lx_, d.anc));
    }
  }
}

std::vector<Mat> StructuredController::initial(int cols) const {
  std::vector<Mat> z;
  z.reserve(nodes_.size());
  for (const auto& d : nodes_) z.push_back(Mat::Zero(d.funnel_dim, cols));
  return z;
}

Mat StructuredController::control(int t, int i, const std::vector<Mat>& z) const {
  Mat u = Mat::Zero(lu_.dim(i), z[0].cols());
  if (u.rows() == 0) return u;
  for (int j : nodes_[i].anc) u.noalias() += gains_.K[t][i][j] * z[j];
  return u;
}

Mat StructuredController::controls(int t, const std::vector<Mat>& z) const {
  Mat u(lu_.total(), z[0].cols());
  for (int i = 0; i < nodes(); ++i) u.middleRows(lu_.offset(i), lu_.dim(i)) = control(t, i, z);
  return u;
}

Mat StructuredController::uhat(int t, int j, int i, const std::vector<Mat>& z) const {
  const NodeData& dj = nodes_[j];
  if (!contains(dj.sdes, i)) {
    throw std::invalid_argument("uhat^{" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                "} requires node " + std::to_string(i + 1) +
                                " to be a strict descendant of node " + std::to_string(j + 1));
  }
  Mat u = Mat::Zero(lu_.dim(i), z[j].cols());
  if (u.rows() == 0) return u;
  for (int a : dj.anc) u.noalias() += gains_.K[t][i][a] * z[a];
  for (int b : set_intersection(nodes_[i].anc, dj.sdes)) {
    u.noalias() += gains_.K[t][i][b] * (dj.embed[b] * z[j]);
  }
  return u;
}

Mat StructuredController::predict(int t, int j, const std::vector<Mat>& z, const Mat& u) const {
  const NodeData& d = nodes_[j];
  const StepCache& c = steps_[t];
  Mat next = c.AFF[j] * z[j];
  // Input vector over F(j) in ascending order: actual inputs of ancestors
  // (which all precede j) then reconstructed inputs of strict descendants.
  Mat uf(lu_.total(d.funnel), z[j].cols());
  int row = 0;
  for (int a : d.funnel) {
    const int m = lu_.dim(a);
    if (m > 0) {
      if (a <= j) {
        uf.middleRows(row, m) = u.middleRows(lu_.offset(a), m);
      } else {
        uf.middleRows(row, m) = uhat(t, j, a, z);
      }
    }
    row += m;
  }
  if (uf.rows() > 0) next.noalias() += c.BFF[j] * uf;
  return next;
}

Mat StructuredController::innovation(int t, int j, const std::vector<Mat>& z, const Mat& y) const {
  const NodeData& d = nodes_[j];
  Mat e = sub_rows(y, ly_, d.anc);
  e.noalias() -= steps_[t].CAA[j] * z[j].topRows(d.anc_dim);
  return e;
}

Mat StructuredController::estimator_step(int t, int j, const std::vector<Mat>& z, const Mat& u,
                                         const Mat& y) const {
  Mat next = predict(t, j, z, u);
  const Mat& l = gains_.L[t][j];
  if (l.cols() > 0) next.noalias() -= l * innovation(t, j, z, y);
  return next;
}

std::vector<Mat> StructuredController::advance(int t, const std::vector<Mat>& z, const Mat& u,
                                               const Mat& y) const {
  std::vector<Mat> next;
  next.reserve(nodes_.size());
  for (int j = 0; j < nodes(); ++j) next.push_back(estimator_step(t, j, z, u, y));
  return next;
}

namespace {

// Plant and controller stepped together; when `fit` is set the estimator
// gains are fitted at each step before the estimates are advanced.
StructuredTrajectory run_impl(const ProblemData& p, const StructuredController& ctl,
                              const Mat& x0, const std::vector<Mat>& w, const std::vector<Mat>& v,
                              StructuredGains* fit_target, const PrimitiveBasis* fit) {
  StructuredTrajectory out;
  const int cols = static_cast<int>(x0.cols());
  const BlockLayout lx = p.x_layout();
  std::vector<Mat> z = ctl.initial(cols);
  out.loop.x.push_back(x0);
  out.z.push_back(z);
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    const Mat& x = out.loop.x[t];
    Mat u = ctl.controls(t, z);
    Mat y = s.C * x + v[t];
    Mat xn = s.A * x + s.B * u + w[t];
    if (fit) {
      for (int j = 0; j < ctl.nodes(); ++j) {
        Mat& l = fit_target->L[t][j];
        if (l.cols() == 0) continue;
        const Mat e = ctl.innovation(t, j, z, y);
        const Mat err = sub_rows(xn, lx, ctl.funnel(j)) - ctl.predict(t, j, z, u);
        l = -cov(*fit, err, e) * psd_pinv(cov(*fit, e, e));
      }
    }
    z = ctl.advance(t, z, u, y);
    out.loop.u.push_back(std::move(u));
    out.loop.y.push_back(std::move(y));
    out.loop.x.push_back(std::move(xn));
    out.z.push_back(z);
  }
  return out;
}

std::vector<Mat> selectors_w(const PrimitiveBasis& b) {
  std::vector<Mat> w;
  for (int t = 0; t < b.horizon(); ++t) w.push_back(b.w(t));
  return w;
}

std::vector<Mat> selectors_v(const PrimitiveBasis& b) {
  std::vector<Mat> v;
  for (int t = 0; t < b.horizon(); ++t) v.push_back(b.v(t));
  return v;
}

}  // namespace

StructuredTrajectory run_structured(const ProblemData& p, const StructuredController& ctl,
                                    const Mat& x0, const std::vector<Mat>& w,
                                    const std::vector<Mat>& v) {
  return run_impl(p, ctl, x0, w, v, nullptr, nullptr);
}

StructuredTrajectory run_structured(const ProblemData& p, const StructuredController& ctl,
                                    const PrimitiveBasis& basis) {
  return run_structured(p, ctl, basis.x0(), selectors_w(basis), selectors_v(basis));
}

StructuredGains fit_estimator_gains(const ProblemData& p, const StructuredGains& gains) {
  StructuredController ctl(p, gains);
  const PrimitiveBasis basis(p);
  run_impl(p, ctl, basis.x0(), selectors_w(basis), selectors_v(basis), &ctl.mutable_gains(),
           &basis);
  return ctl.gains();
}

LinearStrategy assemble(const ProblemData& p, const StructuredGains& gains) {
  const StructuredController ctl(p, gains);
  const int ny = p.ny();
  const int cols = p.horizon * ny;
  LinearStrategy out = LinearStrategy::zeros(p);
  std::vector<Mat> z = ctl.initial(cols);
  for (int t = 0; t < p.horizon; ++t) {
    const Mat u = ctl.controls(t, z);
    for (int s = 0; s < t; ++s) out.gain[t][s] = u.middleCols(s * ny, ny);
    Mat y = Mat::Zero(ny, cols);
    y.middleCols(t * ny, ny).setIdentity();
    z = ctl.advance(t, z, u, y);
  }
  return out;
}

}  // namespace mtlqg
