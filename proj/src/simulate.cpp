#include "mtlqg/simulate.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mtlqg {

namespace {

struct Segments {
  Mat x0;
  std::vector<Mat> w, v;
};

Segments split(const ProblemData& p, const PrimitiveBasis& basis, const Vec& prim) {
  Segments s;
  s.x0 = prim.segment(basis.x0_offset(), p.nx());
  for (int t = 0; t < p.horizon; ++t) {
    s.w.push_back(prim.segment(basis.w_offset(t), p.nx()));
    s.v.push_back(prim.segment(basis.v_offset(t), p.ny()));
  }
  return s;
}

void run_linear(const ProblemData& p, const LinearStrategy& f, const Segments& seg, Rollout& r) {
  r.x.assign(1, seg.x0.col(0));
  r.u.clear();
  r.y.clear();
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    Vec u = Vec::Zero(p.nu());
    for (int k = 0; k < t; ++k) u.noalias() += f.gain[t][k] * r.y[k];
    r.y.push_back(s.C * r.x[t] + seg.v[t].col(0));
    r.x.push_back(s.A * r.x[t] + s.B * u + seg.w[t].col(0));
    r.u.push_back(std::move(u));
  }
}

void run_structured_sample(const ProblemData& p, const StructuredController& ctl,
                           const Segments& seg, Rollout& r) {
  const StructuredTrajectory tr = run_structured(p, ctl, seg.x0, seg.w, seg.v);
  r.x.clear();
  r.u.clear();
  r.y.clear();
  for (const Mat& m : tr.loop.x) r.x.push_back(m.col(0));
  for (const Mat& m : tr.loop.u) r.u.push_back(m.col(0));
  for (const Mat& m : tr.loop.y) r.y.push_back(m.col(0));
}

// Controller prepared once for many rollouts.
class Runner {
 public:
  Runner(const ProblemData& p, const Controller& c) : p_(p) {
    if (const auto* f = std::get_if<LinearStrategy>(&c)) {
      check_strategy(p, *f);
      linear_ = f;
    } else {
      structured_.emplace(p, std::get<StructuredGains>(c));
    }
  }

  Rollout run(const PrimitiveBasis& basis, const Vec& prim) const {
    Rollout r;
    r.primitives = prim;
    const Segments seg = split(p_, basis, prim);
    if (linear_) {
      run_linear(p_, *linear_, seg, r);
    } else {
      run_structured_sample(p_, *structured_, seg, r);
    }
    r.cost = realized_cost(p_, r.x, r.u);
    return r;
  }

 private:
  const ProblemData& p_;
  const LinearStrategy* linear_ = nullptr;
  std::optional<StructuredController> structured_;
};

}  // namespace

Vec sample_primitives(const PrimitiveBasis& basis, Rng& rng) {
  Vec g(basis.dim());
  for (int k = 0; k < basis.dim(); ++k) g(k) = rng.normal();
  return basis.factor() * g;
}

double realized_cost(const ProblemData& p, const std::vector<Vec>& x, const std::vector<Vec>& u) {
  double j = 0.0;
  for (int t = 0; t < p.horizon; ++t) {
    const StepData& s = p.steps[t];
    j += x[t].dot(s.Q * x[t]) + 2.0 * x[t].dot(s.S * u[t]) + u[t].dot(s.R * u[t]);
  }
  j += x[p.horizon].dot(p.p_final * x[p.horizon]);
  return j;
}

Rollout rollout_from(const ProblemData& p, const PrimitiveBasis& basis, const Controller& c,
                     const Vec& primitives) {
  if (primitives.size() != basis.dim()) {
    throw std::invalid_argument("primitive sample has the wrong dimension");
  }
  return Runner(p, c).run(basis, primitives);
}

Rollout rollout(const ProblemData& p, const PrimitiveBasis& basis, const Controller& c,
                std::uint64_t seed) {
  Rng rng(seed);
  Rollout r = rollout_from(p, basis, c, sample_primitives(basis, rng));
  r.seed = seed;
  return r;
}

CostEstimate empirical_cost(const ProblemData& p, const Controller& c, int rollouts,
                            std::uint64_t seed) {
  if (rollouts < 2) throw std::invalid_argument("empirical_cost needs at least 2 rollouts");
  const PrimitiveBasis basis(p);
  const Runner runner(p, c);
  // Welford accumulation in rollout order keeps the result deterministic.
  double mean = 0.0, m2 = 0.0;
  for (int k = 0; k < rollouts; ++k) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
    const double cost = runner.run(basis, sample_primitives(basis, rng)).cost;
    const double delta = cost - mean;
    mean += delta / (k + 1);
    m2 += delta * (cost - mean);
  }
  CostEstimate e;
  e.rollouts = rollouts;
  e.mean = mean;
  e.std_dev = std::sqrt(m2 / (rollouts - 1));
  e.std_error = e.std_dev / std::sqrt(static_cast<double>(rollouts));
  return e;
}

double controller_cost(const ProblemData& p, const Controller& c) {
  const PrimitiveBasis basis(p);
  if (const auto* f = std::get_if<LinearStrategy>(&c)) {
    return exact_cost(p, basis, propagate(p, basis, *f));
  }
  const StructuredController ctl(p, std::get<StructuredGains>(c));
  return exact_cost(p, basis, run_structured(p, ctl, basis).loop);
}

void write_csv(std::ostream& out, const ProblemData& p, const Rollout& r) {
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  auto field = [](const Vec& v, int off, int dim) {
    std::ostringstream os;
    os.precision(17);
    for (int k = 0; k < dim; ++k) {
      if (k) os << ' ';
      os << v(off + k);
    }
    return os.str();
  };
  out << "t,node,x,u,y\n";
  for (int t = 0; t <= p.horizon; ++t) {
    for (int i = 0; i < p.dag.size(); ++i) {
      out << t << ',' << i + 1 << ',' << field(r.x[t], lx.offset(i), lx.dim(i)) << ',';
      if (t < p.horizon) {
        out << field(r.u[t], lu.offset(i), lu.dim(i)) << ',' << field(r.y[t], ly.offset(i), ly.dim(i));
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

}  // namespace mtlqg
