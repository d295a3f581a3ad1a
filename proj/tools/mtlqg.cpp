// mtlqg: command-line front end for checking, solving, verifying and
// simulating decentralized LQG problems on multitree graphs.
//
// Exit codes: 0 pass, 1 semantic failure, 2 input error, 3 guardrail.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mtlqg/centralized.hpp"
#include "mtlqg/io.hpp"
#include "mtlqg/oracle.hpp"
#include "mtlqg/simulate.hpp"
#include "mtlqg/structured.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;

namespace {

enum Exit { kPass = 0, kFail = 1, kInput = 2, kGuardrail = 3 };

double default_tol() {
  if (const char* env = std::getenv("MTLQG_TOL")) {
    try {
      return std::stod(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring unparsable MTLQG_TOL=" << env << "\n";
    }
  }
  return kSolveTol;
}

Json report_header(const std::string& command) {
  return Json{{"schema", kReportSchema}, {"tool_version", kToolVersion}, {"command", command}};
}

void emit(const std::string& path, const Json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(path, j);
  }
}

ProblemData load_valid(const std::string& path) {
  ProblemData p = read_problem(path);
  require_valid(p);
  return p;
}

Json mask_json(const BinaryMatrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    std::string row;
    for (int c = 0; c < m.cols(); ++c) row += m(r, c) ? '1' : '0';
    rows.push_back(row);
  }
  return rows;
}

void print_mask(std::ostream& os, const std::string& title, const BinaryMatrix& m) {
  os << title << "\n";
  for (int r = 0; r < m.rows(); ++r) {
    os << "  ";
    for (int c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
    os << "\n";
  }
}

Json set_json(const NodeSet& s) {
  Json a = Json::array();
  for (int v : s) a.push_back(v + 1);
  return a;
}

Json violations_json(const std::vector<AssumptionViolation>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) {
    Json e = {{"i", v.i + 1}, {"j", v.j + 1}, {"matrix", v.matrix}, {"requirement", v.requirement}};
    if (v.t >= 0) e["t"] = v.t;
    a.push_back(e);
  }
  return a;
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string input, output;
  double zero_tol = 0.0;
};

int cmd_check(const CheckArgs& a) {
  const ProblemData p = load_valid(a.input);
  const AssumptionReport rep = check_assumptions(p, a.zero_tol);
  const Dag& dag = p.dag;
  const auto rel = all_relations(dag);

  print_mask(std::cout, "S", dag.sparsity());
  print_mask(std::cout, "S S^T (common ancestor)", rep.noise_mask);
  print_mask(std::cout, "S^T S (common descendant)", rep.cost_mask);

  Json gens = Json::array();
  std::cout << "generations\n";
  const auto g = generations(dag);
  for (size_t k = 0; k < g.size(); ++k) {
    std::cout << "  G" << k << " = " << format_set(g[k]) << "\n";
    gens.push_back(set_json(g[k]));
  }

  Json relations = Json::array();
  std::cout << "relations\n";
  for (int j = 0; j < dag.size(); ++j) {
    const NodeRelations& r = rel[j];
    std::cout << "  node " << j + 1 << ": anc=" << format_set(r.anc) << " des=" << format_set(r.des)
              << " funnel=" << format_set(r.funnel) << " siblings=" << format_set(r.siblings)
              << " coparents=" << format_set(r.coparents)
              << " nonrelatives=" << format_set(r.nonrelatives) << "\n";
    relations.push_back({{"node", j + 1},
                         {"anc", set_json(r.anc)},
                         {"des", set_json(r.des)},
                         {"funnel", set_json(r.funnel)},
                         {"siblings", set_json(r.siblings)},
                         {"coparents", set_json(r.coparents)},
                         {"nonrelatives", set_json(r.nonrelatives)}});
  }

  std::cout << "A1 (multitree): " << (rep.a1 ? "pass" : "fail") << "\n";
  Json diamond = nullptr;
  if (rep.diamond) {
    const Diamond& d = *rep.diamond;
    std::cout << "  diamond (" << d.top + 1 << "," << d.left + 1 << "," << d.right + 1 << ","
              << d.bottom + 1 << ")\n";
    diamond = Json::array({d.top + 1, d.left + 1, d.right + 1, d.bottom + 1});
  }
  std::cout << "A2: " << (rep.a2 ? "pass" : "fail") << "\n";
  for (const auto& v : rep.a2_violations) {
    std::cout << "  (" << v.i + 1 << "," << v.j + 1 << ") " << v.matrix
              << (v.t >= 0 ? " t=" + std::to_string(v.t) : "") << ": needs " << v.requirement << "\n";
  }
  std::cout << "A2': " << (rep.a2prime ? "pass" : "fail") << "\n";
  for (const auto& v : rep.a2prime_violations) {
    std::cout << "  (" << v.i + 1 << "," << v.j + 1 << ") " << v.matrix
              << (v.t >= 0 ? " t=" + std::to_string(v.t) : "") << ": needs " << v.requirement << "\n";
  }

  const auto cross = rep.a2 ? std::nullopt : find_cross_coupling(p, rep);
  if (cross) {
    std::cout << "  cross coupling: node " << cross->j + 1 << " shares noise with " << cross->k + 1
              << " and cost with its descendant " << cross->m + 1 << "\n";
  }

  const bool ok = rep.a1 && (rep.a2 || rep.a2prime);
  if (!a.output.empty()) {
    Json j = report_header("check");
    j["instance"] = describe(p);
    j["zero_tol"] = a.zero_tol;
    j["S"] = mask_json(dag.sparsity());
    j["SSt"] = mask_json(rep.noise_mask);
    j["StS"] = mask_json(rep.cost_mask);
    j["generations"] = gens;
    j["relations"] = relations;
    j["A1"] = rep.a1;
    j["diamond"] = diamond;
    j["A2"] = rep.a2;
    j["A2_violations"] = violations_json(rep.a2_violations);
    j["A2prime"] = rep.a2prime;
    j["A2prime_violations"] = violations_json(rep.a2prime_violations);
    j["cross_coupling"] = cross ? Json::array({cross->j + 1, cross->k + 1, cross->m + 1}) : Json(nullptr);
    j["pass"] = ok;
    emit(a.output, j);
  }
  return ok ? kPass : kFail;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string input, output;
  double tol = 0.0;
  bool force = false;
};

int cmd_oracle(const OracleArgs& a) {
  const ProblemData p = load_valid(a.input);
  OracleOptions opt;
  opt.force = a.force;
  const OracleSolution sol = solve_oracle(p, opt);
  const AssumptionReport rep = check_assumptions(p);
  const bool applicable = rep.a1 && (rep.a2 || rep.a2prime);
  const StructureResiduals res = structure_residuals(p, sol);

  std::cout << std::setprecision(12);
  std::cout << "cost " << sol.cost << "\n";
  std::cout << "parameters " << sol.parameters << "\n";
  std::cout << "gradient norm " << sol.gradient_norm << " (certified: " << (sol.certified() ? "yes" : "no")
            << ")\n";
  std::cout << "max structure residual " << res.max_residual
            << (applicable ? "" : " (assumptions fail; informational)") << "\n";

  Json per_node = Json::array();
  for (int i = 0; i < p.dag.size(); ++i) {
    per_node.push_back({{"node", i + 1}, {"residuals", res.per_node[i]}});
  }
  const bool structure_ok = !applicable || res.max_residual <= a.tol;
  const bool ok = sol.certified() && structure_ok;
  Json j = report_header("oracle");
  j["instance"] = describe(p);
  j["cost"] = sol.cost;
  j["parameters"] = sol.parameters;
  j["gradient_norm"] = sol.gradient_norm;
  j["hessian_norm"] = sol.hessian_norm;
  j["rcond"] = sol.rcond;
  j["pseudo_inverse"] = sol.pseudo_inverse;
  j["certified"] = sol.certified();
  j["assumptions_hold"] = applicable;
  j["tolerance"] = a.tol;
  j["max_structure_residual"] = res.max_residual;
  j["structure_residuals"] = per_node;
  j["strategy"] = oracle_to_json(sol.strategy);
  j["pass"] = ok;
  if (!a.output.empty()) emit(a.output, j);
  return ok ? kPass : kFail;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string input, output;
  std::vector<std::string> suites;
  std::uint64_t seed = 1;
  int n_instances = 50;
};

int cmd_verify(const VerifyArgs& a) {
  std::optional<Instance> given;
  if (!a.input.empty()) given = Instance{"input", a.seed, load_valid(a.input)};
  std::vector<ExperimentReport> reports;
  for (const std::string& suite : a.suites) {
    if (suite == "thm1" || suite == "thm2") {
      std::vector<Instance> inst;
      if (given) {
        inst.push_back(*given);
      } else {
        inst = instance_family(a.seed, a.n_instances);
      }
      for (size_t k = 0; k < inst.size(); ++k) {
        reports.push_back(suite == "thm1" ? run_theorem1(inst[k])
                                          : run_theorem2(inst[k], splitmix64(a.seed + k)));
      }
    } else if (suite == "lemmas") {
      std::vector<Dag> dags = {five_node_dag(), four_node_dag()};
      for (int k = 0; k < a.n_instances; ++k) {
        dags.push_back(random_multitree(2 + k % 7, splitmix64(a.seed) + k));
      }
      std::vector<Instance> inst = instance_family(a.seed, std::min(a.n_instances, 24));
      if (given) inst.push_back(*given);
      reports.push_back(run_lemma_battery(dags, inst, a.seed));
    } else if (suite == "examples") {
      for (auto& r : run_examples(a.seed)) reports.push_back(std::move(r));
    } else if (suite == "negative") {
      const ProblemData p = given ? given->problem : negative_control_instance(a.seed);
      reports.push_back(run_negative_control(p, a.seed));
    } else if (suite == "six-node") {
      for (int k = 0; k < std::max(1, a.n_instances / 5); ++k) reports.push_back(run_six_node(a.seed + k));
    } else if (suite == "monte-carlo") {
      for (const Instance& inst : instance_family(a.seed, std::max(1, a.n_instances / 10))) {
        reports.push_back(run_monte_carlo(inst, 10000, a.seed));
      }
    }
  }

  int failures = 0;
  Json list = Json::array();
  for (const ExperimentReport& r : reports) {
    const char* verdict = !r.gated() ? "INFO" : r.pass() ? "PASS" : "FAIL";
    std::cout << verdict << "  " << r.id << "  " << r.instance << "\n";
    for (const Metric& m : r.metrics) {
      if (m.gated && !m.pass()) std::cout << "      " << m.name << " = " << m.value << " > " << m.tolerance << "\n";
    }
    if (!r.pass()) ++failures;
    list.push_back(report_to_json(r));
  }
  std::cout << reports.size() << " experiments, " << failures << " failed\n";
  Json j = report_header("verify");
  j["seed"] = a.seed;
  j["suites"] = a.suites;
  j["n_instances"] = a.n_instances;
  j["reports"] = list;
  j["pass"] = failures == 0;
  if (!a.output.empty()) emit(a.output, j);
  return failures == 0 ? kPass : kFail;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string input, gains, csv, output;
  int rollouts = 1000;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  const ProblemData p = load_valid(a.input);
  const GainsFile g = gains_from_json(p, read_json(a.gains));
  const Controller ctl = g.structured ? Controller(g.gains) : Controller(g.strategy);
  const CostEstimate est = empirical_cost(p, ctl, a.rollouts, a.seed);
  const double exact = controller_cost(p, ctl);
  const double z = est.std_error > 0 ? std::abs(est.mean - exact) / est.std_error : 0.0;
  const bool agree = est.std_error > 0 ? z <= 3.0 : std::abs(est.mean - exact) <= 1e-10 * (1 + std::abs(exact));

  std::cout << std::setprecision(10);
  std::cout << "empirical cost " << est.mean << " +/- " << est.std_error << " (" << est.rollouts
            << " rollouts, seed " << a.seed << ")\n";
  std::cout << "exact cost " << exact << "\n";
  std::cout << "agreement " << (agree ? "yes" : "no") << " (" << z << " standard errors)\n";

  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw std::runtime_error("cannot write " + a.csv);
    const PrimitiveBasis basis(p);
    write_csv(out, p, rollout(p, basis, ctl, a.seed));
  }
  if (!a.output.empty()) {
    Json j = report_header("simulate");
    j["instance"] = describe(p);
    j["seed"] = a.seed;
    j["rollouts"] = est.rollouts;
    j["mean"] = est.mean;
    j["std_error"] = est.std_error;
    j["exact_cost"] = exact;
    j["agreement"] = agree;
    emit(a.output, j);
  }
  return kPass;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const std::string& input, const std::string& output) {
  const ProblemData p = load_valid(input);
  const ProblemData c = p.dag.size() == 1 ? p : as_centralized(p);
  const RiccatiSolution lqr = solve_lqr(c);
  const KalmanSolution kf = solve_kalman(c);
  const double cost = optimal_cost(c, lqr, kf);
  std::cout << std::setprecision(12) << "centralized optimal cost " << cost << "\n";
  Json j = report_header("solve");
  j["instance"] = describe(p);
  j["centralized"] = true;
  j["cost"] = cost;
  Json k = Json::array(), l = Json::array();
  for (int t = 0; t < c.horizon; ++t) {
    k.push_back({{"t", t}, {"K", matrix_to_json(lqr.K[t])}});
    l.push_back({{"t", t}, {"L", matrix_to_json(kf.L[t])}});
  }
  j["K"] = k;
  j["L"] = l;
  if (!output.empty()) emit(output, j);
  return kPass;
}

// ---------------------------------------------------------------- generate / gains

struct GenerateArgs {
  std::string family = "random", mode = "a2", output;
  int n = 3, horizon = 3;
  std::uint64_t seed = 1;
};

int cmd_generate(const GenerateArgs& a) {
  ProblemData p;
  if (a.family == "negative-control") {
    p = negative_control_instance(a.seed, a.horizon);
  } else {
    p = make_instance(a.family, a.n, a.horizon, a.seed,
                      a.mode == "a2prime" ? InstanceMode::kA2Prime : InstanceMode::kA2)
            .problem;
  }
  if (a.output.empty() || a.output == "-") {
    std::cout << problem_to_json(p).dump(2) << "\n";
  } else {
    write_problem(a.output, p);
  }
  std::cerr << describe(p) << "\n";
  return kPass;
}

int cmd_gains(const std::string& input, const std::string& output, std::uint64_t seed, double scale) {
  const ProblemData p = load_valid(input);
  const StructuredGains g = fit_estimator_gains(p, random_structured_gains(p, seed, scale));
  emit(output, gains_to_json(g));
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized LQG on multitree graphs: structure checks, oracle, verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Print masks, generations, relations and assumption verdicts");
  c->add_option("--input", check.input, "problem file")->required();
  c->add_option("--output", check.output, "write the check report as JSON");
  c->add_option("--zero-tol", check.zero_tol, "treat |entries| <= tol as structural zeros");

  OracleArgs oracle;
  oracle.tol = default_tol();
  auto* o = app.add_subcommand("oracle", "Globally optimal linear strategy and structure residuals");
  o->add_option("--input", oracle.input, "problem file")->required();
  o->add_option("--output", oracle.output, "report file");
  o->add_option("--tol", oracle.tol, "structure residual tolerance (default $MTLQG_TOL or 1e-6)");
  o->add_flag("--force", oracle.force, "ignore the parameter-count guardrail");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Run verification suites");
  v->add_option("--input", verify.input, "problem file used by thm1, thm2, lemmas and negative");
  v->add_option("--suite", verify.suites, "thm1, thm2, lemmas, examples, negative, six-node, monte-carlo")
      ->required()
      ->check(CLI::IsMember({"thm1", "thm2", "lemmas", "examples", "negative", "six-node", "monte-carlo"}));
  v->add_option("--seed", verify.seed, "seed");
  v->add_option("--n-instances", verify.n_instances, "random instances per suite")->check(CLI::PositiveNumber);
  v->add_option("--output", verify.output, "report file");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Monte Carlo cost of a gains file");
  s->add_option("--input", sim.input, "problem file")->required();
  s->add_option("--gains", sim.gains, "gains file")->required();
  s->add_option("--rollouts", sim.rollouts, "number of rollouts")->check(CLI::Range(2, 100000000));
  s->add_option("--seed", sim.seed, "seed");
  s->add_option("--csv", sim.csv, "write the first rollout's trajectory as CSV");
  s->add_option("--output", sim.output, "report file");

  std::string solve_input, solve_output;
  bool centralized = false;
  auto* so = app.add_subcommand("solve", "Classical LQG solution");
  so->add_option("--input", solve_input, "problem file")->required();
  so->add_flag("--centralized", centralized, "full information sharing (the only mode)")->required();
  so->add_option("--output", solve_output, "report file");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a random problem file");
  g->add_option("--family", gen.family, "chain, broadcast-out, broadcast-in, five-node, four-node, random, "
                                        "single, negative-control")
      ->check(CLI::IsMember({"chain", "broadcast-out", "broadcast-in", "five-node", "four-node", "random",
                             "single", "negative-control"}));
  g->add_option("--n", gen.n, "number of nodes")->check(CLI::Range(1, 64));
  g->add_option("--horizon", gen.horizon, "horizon T")->check(CLI::Range(1, 1000));
  g->add_option("--seed", gen.seed, "seed");
  g->add_option("--mode", gen.mode, "a2 or a2prime")->check(CLI::IsMember({"a2", "a2prime"}));
  g->add_option("--output", gen.output, "problem file");

  std::string gains_input, gains_output;
  std::uint64_t gains_seed = 1;
  double gains_scale = 0.5;
  auto* gs = app.add_subcommand("gains", "Random structured controller gains with fitted estimator gains");
  gs->add_option("--input", gains_input, "problem file")->required();
  gs->add_option("--output", gains_output, "gains file");
  gs->add_option("--seed", gains_seed, "seed");
  gs->add_option("--scale", gains_scale, "entries of K drawn from [-scale, scale]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*c) return cmd_check(check);
    if (*o) return cmd_oracle(oracle);
    if (*v) return cmd_verify(verify);
    if (*s) return cmd_simulate(sim);
    if (*so) return cmd_solve(solve_input, solve_output);
    if (*g) return cmd_generate(gen);
    if (*gs) return cmd_gains(gains_input, gains_output, gains_seed, gains_scale);
  } catch (const GuardrailError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGuardrail;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kPass;
}
