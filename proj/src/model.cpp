#include "mtlqg/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mtlqg/linalg.hpp"
#include "mtlqg/rng.hpp"

namespace mtlqg {

BlockLayout::BlockLayout(std::vector<int> dims) : dims_(std::move(dims)) {
  offsets_.resize(dims_.size() + 1);
  offsets_[0] = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) offsets_[k + 1] = offsets_[k] + dims_[k];
}

int BlockLayout::total(const NodeSet& s) const {
  int d = 0;
  for (int v : s) d += dims_[v];
  return d;
}

std::vector<int> BlockLayout::indices(const NodeSet& s) const {
  std::vector<int> idx;
  idx.reserve(total(s));
  for (int v : s) {
    for (int k = 0; k < dims_[v]; ++k) idx.push_back(offsets_[v] + k);
  }
  return idx;
}

Mat sub_block(const Mat& m, const BlockLayout& rows, const NodeSet& row_nodes,
              const BlockLayout& cols, const NodeSet& col_nodes) {
  const auto ri = rows.indices(row_nodes);
  const auto ci = cols.indices(col_nodes);
  Mat out(ri.size(), ci.size());
  for (std::size_t a = 0; a < ri.size(); ++a) {
    for (std::size_t b = 0; b < ci.size(); ++b) out(a, b) = m(ri[a], ci[b]);
  }
  return out;
}

Mat sub_rows(const Mat& m, const BlockLayout& rows, const NodeSet& row_nodes) {
  const auto ri = rows.indices(row_nodes);
  Mat out(ri.size(), m.cols());
  for (std::size_t a = 0; a < ri.size(); ++a) out.row(a) = m.row(ri[a]);
  return out;
}

namespace {

int sum(const std::vector<int>& v) {
  int s = 0;
  for (int d : v) s += d;
  return s;
}

}  // namespace

int ProblemData::nx() const { return sum(dims.x); }
int ProblemData::nu() const { return sum(dims.u); }
int ProblemData::ny() const { return sum(dims.y); }

ProblemData ProblemData::zeros(Dag dag, Dims dims, int horizon) {
  ProblemData p;
  p.dag = std::move(dag);
  p.dims = std::move(dims);
  p.horizon = horizon;
  const int nx = p.nx(), nu = p.nu(), ny = p.ny();
  StepData s;
  s.A = Mat::Zero(nx, nx);
  s.B = Mat::Zero(nx, nu);
  s.C = Mat::Zero(ny, nx);
  s.Q = Mat::Zero(nx, nx);
  s.R = Mat::Zero(nu, nu);
  s.S = Mat::Zero(nx, nu);
  s.W = Mat::Zero(nx, nx);
  s.V = Mat::Zero(ny, ny);
  s.U = Mat::Zero(ny, nx);
  p.steps.assign(horizon, s);
  p.sigma_init = Mat::Zero(nx, nx);
  p.p_final = Mat::Zero(nx, nx);
  return p;
}

std::string Diagnostic::describe() const {
  std::ostringstream os;
  os << matrix;
  if (i >= 0) os << " block (" << i + 1 << "," << j + 1 << ")";
  if (t >= 0) os << " t=" << t;
  os << ": " << message;
  return os.str();
}

namespace {

double tol_for(const Mat& m) {
  const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  return 1e-10 * std::max(1.0, scale);
}

void check_shape(std::vector<Diagnostic>& out, const Mat& m, int rows, int cols,
                 const std::string& name, int t, bool& ok) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << "expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    out.push_back({name, -1, -1, t, os.str()});
    ok = false;
  }
}

void check_conformance(std::vector<Diagnostic>& out, const Mat& m, const BlockLayout& rows,
                       const BlockLayout& cols, const BinaryMatrix& s, const std::string& name,
                       int t) {
  const int n = static_cast<int>(s.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (s(i, j)) continue;
      auto b = block(m, rows, i, cols, j);
      if (b.size() && b.cwiseAbs().maxCoeff() != 0.0) {
        out.push_back({name, i, j, t,
                       "nonzero block where S_" + std::to_string(i + 1) + std::to_string(j + 1) +
                           " = 0"});
      }
    }
  }
}

void check_symmetric_psd(std::vector<Diagnostic>& out, const Mat& m, const std::string& name,
                         int t, bool strict) {
  if (asymmetry(m) > tol_for(m)) out.push_back({name, -1, -1, t, "not symmetric"});
  const double lo = min_eigenvalue(m);
  if (strict) {
    if (!(lo > tol_for(m))) {
      std::ostringstream os;
      os << "not positive definite (min eigenvalue " << lo << ")";
      out.push_back({name, -1, -1, t, os.str()});
    }
  } else if (lo < -tol_for(m)) {
    std::ostringstream os;
    os << "not positive semidefinite (min eigenvalue " << lo << ")";
    out.push_back({name, -1, -1, t, os.str()});
  }
}

Mat stacked_cost(const StepData& s) {
  const auto nx = s.Q.rows(), nu = s.R.rows();
  Mat m(nx + nu, nx + nu);
  m << s.Q, s.S, s.S.transpose(), s.R;
  return m;
}

Mat stacked_noise(const StepData& s) {
  const auto nx = s.W.rows(), ny = s.V.rows();
  Mat m(nx + ny, nx + ny);
  m << s.W, s.U.transpose(), s.U, s.V;
  return m;
}

}  // namespace

std::vector<Diagnostic> validate(const ProblemData& p) {
  std::vector<Diagnostic> out;
  const int n = p.dag.size();
  auto dims_ok = [&](const std::vector<int>& d, const char* name) {
    if (static_cast<int>(d.size()) != n) {
      out.push_back({std::string("dims.") + name, -1, -1, -1,
                     "expected " + std::to_string(n) + " entries"});
      return false;
    }
    for (int v : d) {
      if (v < 0) {
        out.push_back({std::string("dims.") + name, -1, -1, -1, "negative dimension"});
        return false;
      }
    }
    return true;
  };
  bool ok = dims_ok(p.dims.x, "x");
  ok = dims_ok(p.dims.u, "u") && ok;
  ok = dims_ok(p.dims.y, "y") && ok;
  if (p.horizon < 0) {
    out.push_back({"horizon", -1, -1, -1, "must be nonnegative"});
    ok = false;
  }
  if (static_cast<int>(p.steps.size()) != p.horizon) {
    out.push_back({"steps", -1, -1, -1,
                   "expected " + std::to_string(p.horizon) + " time steps, got " +
                       std::to_string(p.steps.size())});
    ok = false;
  }
  if (!ok) return out;

  const int nx = p.nx(), nu = p.nu(), ny = p.ny();
  bool shapes = true;
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    check_shape(out, s.A, nx, nx, "A", t, shapes);
    check_shape(out, s.B, nx, nu, "B", t, shapes);
    check_shape(out, s.C, ny, nx, "C", t, shapes);
    check_shape(out, s.Q, nx, nx, "Q", t, shapes);
    check_shape(out, s.R, nu, nu, "R", t, shapes);
    check_shape(out, s.S, nx, nu, "S", t, shapes);
    check_shape(out, s.W, nx, nx, "W", t, shapes);
    check_shape(out, s.V, ny, ny, "V", t, shapes);
    check_shape(out, s.U, ny, nx, "U", t, shapes);
  }
  check_shape(out, p.sigma_init, nx, nx, "Sigma_init", -1, shapes);
  check_shape(out, p.p_final, nx, nx, "P_final", -1, shapes);
  if (!shapes) return out;

  const BinaryMatrix& S = p.dag.sparsity();
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    check_conformance(out, s.A, lx, lx, S, "A", t);
    check_conformance(out, s.B, lx, lu, S, "B", t);
    check_conformance(out, s.C, ly, lx, S, "C", t);
    check_symmetric_psd(out, stacked_cost(s), "cost", t, false);
    check_symmetric_psd(out, s.R, "R", t, true);
    check_symmetric_psd(out, stacked_noise(s), "noise", t, false);
  }
  check_symmetric_psd(out, p.sigma_init, "Sigma_init", -1, false);
  check_symmetric_psd(out, p.p_final, "P_final", -1, false);
  return out;
}

void require_valid(const ProblemData& problem) {
  const auto diags = validate(problem);
  if (diags.empty()) return;
  std::ostringstream os;
  os << "invalid problem:";
  for (const auto& d : diags) os << "\n  " << d.describe();
  throw std::invalid_argument(os.str());
}

BinaryMatrix common_ancestor_mask(const BinaryMatrix& s) {
  BinaryMatrix m = s * s.transpose();
  return m.unaryExpr([](int v) { return v ? 1 : 0; });
}

BinaryMatrix common_descendant_mask(const BinaryMatrix& s) {
  BinaryMatrix m = s.transpose() * s;
  return m.unaryExpr([](int v) { return v ? 1 : 0; });
}

namespace {

bool block_zero(const Mat& m, const BlockLayout& rows, int i, const BlockLayout& cols, int j,
                double tol) {
  auto b = block(m, rows, i, cols, j);
  return b.size() == 0 || b.cwiseAbs().maxCoeff() <= tol;
}

struct NamedBlock {
  const char* name;
  const Mat* m;
  const BlockLayout* rows;
  const BlockLayout* cols;
  int t;
};

std::vector<NamedBlock> cost_matrices(const ProblemData& p, const BlockLayout& lx,
                                      const BlockLayout& lu) {
  std::vector<NamedBlock> out;
  for (int t = 0; t < p.horizon; ++t) {
    out.push_back({"Q", &p.steps[t].Q, &lx, &lx, t});
    out.push_back({"R", &p.steps[t].R, &lu, &lu, t});
    out.push_back({"S", &p.steps[t].S, &lx, &lu, t});
  }
  out.push_back({"P_final", &p.p_final, &lx, &lx, -1});
  return out;
}

std::vector<NamedBlock> noise_matrices(const ProblemData& p, const BlockLayout& lx,
                                       const BlockLayout& ly) {
  std::vector<NamedBlock> out;
  for (int t = 0; t < p.horizon; ++t) {
    out.push_back({"W", &p.steps[t].W, &lx, &lx, t});
    out.push_back({"V", &p.steps[t].V, &ly, &ly, t});
    out.push_back({"U", &p.steps[t].U, &ly, &lx, t});
  }
  out.push_back({"Sigma_init", &p.sigma_init, &lx, &lx, -1});
  return out;
}

// Matrices of the set whose (i,j) or (j,i) block is nonzero.
std::vector<const NamedBlock*> coupled(const std::vector<NamedBlock>& set, int i, int j,
                                       double tol) {
  std::vector<const NamedBlock*> out;
  for (const auto& nb : set) {
    if (!block_zero(*nb.m, *nb.rows, i, *nb.cols, j, tol) ||
        !block_zero(*nb.m, *nb.rows, j, *nb.cols, i, tol)) {
      out.push_back(&nb);
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<PairClass>> classify_pairs(const ProblemData& p, double zero_tol) {
  const int n = p.dag.size();
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  const auto costs = cost_matrices(p, lx, lu);
  const auto noises = noise_matrices(p, lx, ly);
  const BinaryMatrix anc = common_ancestor_mask(p.dag.sparsity());
  const BinaryMatrix des = common_descendant_mask(p.dag.sparsity());
  std::vector<std::vector<PairClass>> out(n, std::vector<PairClass>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      PairClass& c = out[i][j];
      c.common_ancestor = anc(i, j) != 0;
      c.common_descendant = des(i, j) != 0;
      c.decoupled_cost = coupled(costs, i, j, zero_tol).empty();
      c.uncorrelated_noise = coupled(noises, i, j, zero_tol).empty();
    }
  }
  return out;
}

void check_a2(const ProblemData& p, AssumptionReport& report, double zero_tol) {
  const int n = p.dag.size();
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  const auto costs = cost_matrices(p, lx, lu);
  const auto noises = noise_matrices(p, lx, ly);
  report.noise_mask = common_ancestor_mask(p.dag.sparsity());
  report.cost_mask = common_descendant_mask(p.dag.sparsity());
  report.a2_violations.clear();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!report.cost_mask(i, j)) {
        for (const NamedBlock* nb : coupled(costs, i, j, zero_tol)) {
          report.a2_violations.push_back({i, j, nb->name, nb->t, "decoupled cost"});
        }
      }
      if (!report.noise_mask(i, j)) {
        for (const NamedBlock* nb : coupled(noises, i, j, zero_tol)) {
          report.a2_violations.push_back({i, j, nb->name, nb->t, "uncorrelated noise"});
        }
      }
    }
  }
  report.a2 = report.a2_violations.empty();
}

void check_a2prime(const ProblemData& p, AssumptionReport& report, double zero_tol) {
  const int n = p.dag.size();
  report.pairs = classify_pairs(p, zero_tol);
  report.a2prime_violations.clear();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const PairClass& c = report.pairs[i][j];
      if (c.common_ancestor && c.common_descendant) continue;
      if (c.common_descendant) {
        if (!c.uncorrelated_noise) report.a2prime_violations.push_back({i, j, "", -1, "uncorrelated noise"});
      } else if (c.common_ancestor) {
        if (!c.decoupled_cost) report.a2prime_violations.push_back({i, j, "", -1, "decoupled cost"});
      } else if (!c.decoupled_cost && !c.uncorrelated_noise) {
        report.a2prime_violations.push_back(
            {i, j, "", -1, "decoupled cost or uncorrelated noise"});
      }
    }
  }
  report.a2prime = report.a2prime_violations.empty();

  report.splits.assign(n, {});
  for (int j = 0; j < n; ++j) {
    for (int k : relations(p.dag, j).nonrelatives) {
      const PairClass& c = report.pairs[j][k];
      if (c.decoupled_cost && c.uncorrelated_noise) {
        report.splits[j].a.push_back(k);
      } else if (c.uncorrelated_noise) {
        report.splits[j].b.push_back(k);
      } else if (c.decoupled_cost) {
        report.splits[j].c.push_back(k);
      }
    }
  }
}

AssumptionReport check_assumptions(const ProblemData& p, double zero_tol) {
  AssumptionReport r;
  r.diamond = find_diamond(p.dag);
  r.a1 = !r.diamond.has_value();
  check_a2(p, r, zero_tol);
  check_a2prime(p, r, zero_tol);
  return r;
}

std::optional<CrossCoupling> find_cross_coupling(const ProblemData& p, const AssumptionReport& report) {
  if (report.splits.size() != static_cast<size_t>(p.dag.size())) return std::nullopt;
  const auto rel = all_relations(p.dag);
  for (int j = 0; j < p.dag.size(); ++j) {
    for (int k : report.splits[j].c) {
      for (int m : report.splits[j].b) {
        if (k != m && contains(rel[m].anc, k)) return CrossCoupling{j, k, m};
      }
    }
  }
  return std::nullopt;
}

Dims uniform_dims(int n, int dx, int du, int dy) {
  return Dims{std::vector<int>(n, dx), std::vector<int>(n, du), std::vector<int>(n, dy)};
}

namespace {

Mat random_matrix(Rng& rng, int rows, int cols, double scale) {
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
  }
  return m;
}

// Adds G G^T / k on the coordinates `idx` of m, with G a random k x k matrix.
void add_clique(Rng& rng, Mat& m, const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  if (k == 0) return;
  const Mat g = random_matrix(rng, k, k, 1.0);
  const Mat piece = g * g.transpose() / k;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) m(idx[a], idx[b]) += piece(a, b);
  }
}

std::vector<int> concat_indices(const std::vector<int>& a, const std::vector<int>& b, int shift) {
  std::vector<int> out(a);
  for (int v : b) out.push_back(v + shift);
  return out;
}

}  // namespace

ProblemData random_instance(const Dag& dag, const Dims& dims, int horizon, std::uint64_t seed,
                            const InstanceOptions& opt) {
  if (auto d = find_diamond(dag)) {
    throw GraphError("random_instance requires a multitree; diamond " +
                     format_set({d->top, d->left, d->right, d->bottom}) + " found");
  }
  Rng rng(seed);
  ProblemData p = ProblemData::zeros(dag, dims, horizon);
  const int n = dag.size();
  const int nx = p.nx(), nu = p.nu(), ny = p.ny();
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  const BinaryMatrix& S = dag.sparsity();
  const auto rel = all_relations(dag);

  // Couplings between non-relative pairs allowed by A2': true = cost, false = noise.
  std::vector<std::tuple<int, int, bool>> extra;
  if (opt.mode == InstanceMode::kA2Prime) {
    for (int i = 0; i < n; ++i) {
      for (int j : rel[i].nonrelatives) {
        if (j <= i) continue;
        if (rng.uniform() < opt.coupling_probability) extra.emplace_back(i, j, rng.uniform() < 0.5);
      }
    }
  }

  auto fill_pattern = [&](Mat& m, const BlockLayout& rows, const BlockLayout& cols, double scale) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!S(i, j)) continue;
        m.block(rows.offset(i), cols.offset(j), rows.dim(i), cols.dim(j)) =
            random_matrix(rng, rows.dim(i), cols.dim(j), scale);
      }
    }
  };

  auto cost_clique = [&](Mat& joint, const NodeSet& nodes, bool with_inputs) {
    std::vector<int> idx = lx.indices(nodes);
    if (with_inputs) idx = concat_indices(idx, lu.indices(nodes), nx);
    add_clique(rng, joint, idx);
  };
  auto noise_clique = [&](Mat& joint, const NodeSet& nodes, bool with_meas) {
    std::vector<int> idx = lx.indices(nodes);
    if (with_meas) idx = concat_indices(idx, ly.indices(nodes), nx);
    add_clique(rng, joint, idx);
  };

  for (int t = 0; t < horizon; ++t) {
    StepData& s = p.steps[t];
    fill_pattern(s.A, lx, lx, opt.dynamics_scale);
    fill_pattern(s.B, lx, lu, opt.input_scale);
    fill_pattern(s.C, ly, lx, opt.input_scale);

    // Cost: cliques anc(d) realize exactly the S^T S pattern.
    Mat cost = Mat::Zero(nx + nu, nx + nu);
    for (int d = 0; d < n; ++d) cost_clique(cost, rel[d].anc, true);
    // Noise: cliques des(a) realize exactly the S S^T pattern.
    Mat noise = Mat::Zero(nx + ny, nx + ny);
    for (int a = 0; a < n; ++a) noise_clique(noise, rel[a].des, true);
    for (const auto& [i, j, is_cost] : extra) {
      if (is_cost) {
        cost_clique(cost, {i, j}, true);
      } else {
        noise_clique(noise, {i, j}, true);
      }
    }
    cost += opt.definiteness * Mat::Identity(nx + nu, nx + nu);
    noise += opt.definiteness * Mat::Identity(nx + ny, nx + ny);

    s.Q = cost.topLeftCorner(nx, nx);
    s.S = cost.topRightCorner(nx, nu);
    s.R = cost.bottomRightCorner(nu, nu);
    s.W = noise.topLeftCorner(nx, nx);
    s.U = noise.bottomLeftCorner(ny, nx);
    s.V = noise.bottomRightCorner(ny, ny);
  }

  for (int d = 0; d < n; ++d) cost_clique(p.p_final, rel[d].anc, false);
  for (int a = 0; a < n; ++a) noise_clique(p.sigma_init, rel[a].des, false);
  for (const auto& [i, j, is_cost] : extra) {
    if (is_cost) {
      cost_clique(p.p_final, {i, j}, false);
    } else {
      noise_clique(p.sigma_init, {i, j}, false);
    }
  }
  p.p_final += opt.definiteness * Mat::Identity(nx, nx);
  p.sigma_init += opt.definiteness * Mat::Identity(nx, nx);
  return p;
}

}  // namespace mtlqg
