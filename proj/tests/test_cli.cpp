#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "mtlqg/io.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;
using mtlqg::testing::fixture;
using mtlqg::testing::run_cli;
using mtlqg::testing::simple_problem;

namespace {

std::string temp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mtlqg_cli_" + name)).string();
}

}  // namespace

TEST(Cli, CheckFiveNode) {
  const auto r = run_cli("check --input " + fixture("five_node.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("  1 1 1 0 1\n"), std::string::npos);
  EXPECT_NE(r.out.find("G0 = {4,5}"), std::string::npos);
  EXPECT_NE(r.out.find("A2': pass"), std::string::npos);
}

TEST(Cli, CheckDiamondFails) {
  const std::string path = temp("diamond.json");
  const Dag dag = Dag::from_one_based(5, {{2, 3}, {2, 4}, {3, 5}, {4, 5}});
  write_problem(path, simple_problem(dag, uniform_dims(5, 1, 1, 1), 2));
  const auto r = run_cli("check --input " + path);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("diamond (2,3,4,5)"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, CheckEdgelessPasses) {
  const std::string path = temp("edgeless.json");
  write_problem(path, simple_problem(Dag(3, {}), uniform_dims(3, 1, 1, 1), 2));
  const auto r = run_cli("check --input " + path);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("A1 (multitree): pass"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, InputErrors) {
  const std::string path = temp("garbage.json");
  std::ofstream(path) << "{ not json";
  EXPECT_EQ(run_cli("check --input " + path).code, 2);
  EXPECT_EQ(run_cli("check --input /nonexistent.json").code, 2);
  EXPECT_EQ(run_cli("check").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);

  ProblemData p = simple_problem(Dag(2, {}), uniform_dims(2, 1, 1, 1), 1);
  p.steps[0].R(0, 0) = -1.0;
  write_problem(path, p);
  EXPECT_EQ(run_cli("oracle --input " + path).code, 2);
  std::filesystem::remove(path);
}

TEST(Cli, OracleReport) {
  const std::string out = temp("oracle.json");
  EXPECT_EQ(run_cli("oracle --input " + fixture("five_node.json") + " --output " + out).code, 0);
  const Json j = read_json(out);
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["tool_version"], kToolVersion);
  EXPECT_TRUE(j["certified"].get<bool>());
  EXPECT_LE(j["max_structure_residual"].get<double>(), 1e-6);
  EXPECT_EQ(j["structure_residuals"].size(), 5u);
  std::filesystem::remove(out);
}

TEST(Cli, OracleGuardrail) {
  const std::string path = temp("big.json");
  write_problem(path, simple_problem(chain_dag(4), uniform_dims(4, 2, 2, 2), 20));
  EXPECT_EQ(run_cli("oracle --input " + path).code, 3);
  std::filesystem::remove(path);
}

TEST(Cli, ToleranceFromEnvironment) {
  const std::string path = fixture("five_node.json");
  EXPECT_EQ(run_cli("oracle --input " + path).code, 0);
  EXPECT_EQ(run_cli("oracle --input " + path + " --tol 1e-30").code, 1);
  const std::string cmd = "MTLQG_TOL=1e-30 " + std::string(MTLQG_CLI) + " oracle --input " + path + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}

TEST(Cli, VerifySuites) {
  const std::string seed = " --seed 3 --n-instances 6";
  EXPECT_EQ(run_cli("verify --suite thm1 --suite thm2" + seed).code, 0);
  EXPECT_EQ(run_cli("verify --suite lemmas --suite examples" + seed).code, 0);
  const auto neg = run_cli("verify --suite negative --input " + fixture("negative_control.json"));
  EXPECT_EQ(neg.code, 0);
  EXPECT_NE(neg.out.find("INFO"), std::string::npos);
  EXPECT_EQ(run_cli("verify --suite thm1 --input " + fixture("negative_control.json")).code, 1);
  EXPECT_EQ(run_cli("verify --suite nope").code, 2);
}

TEST(Cli, SimulateAndGains) {
  const std::string gains = temp("gains.json"), csv = temp("traj.csv");
  ASSERT_EQ(run_cli("gains --input " + fixture("four_node.json") + " --seed 2 --output " + gains).code, 0);
  const auto r = run_cli("simulate --input " + fixture("four_node.json") + " --gains " + gains +
                         " --rollouts 2000 --seed 5 --csv " + csv);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("agreement yes"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(csv));
  const auto again = run_cli("simulate --input " + fixture("four_node.json") + " --gains " + gains +
                             " --rollouts 2000 --seed 5");
  EXPECT_EQ(r.out, again.out);
  EXPECT_EQ(run_cli("simulate --input " + fixture("five_node.json") + " --gains " + gains).code, 2);
  std::filesystem::remove(gains);
  std::filesystem::remove(csv);
}

TEST(Cli, SolveCentralized) {
  const std::string path = temp("single.json"), out = temp("solve.json");
  write_problem(path, make_instance("single", 1, 3, 4).problem);
  EXPECT_EQ(run_cli("solve --centralized --input " + path + " --output " + out).code, 0);
  const Json j = read_json(out);
  EXPECT_EQ(j["K"].size(), 3u);
  EXPECT_GT(j["cost"].get<double>(), 0.0);
  std::filesystem::remove(path);
  std::filesystem::remove(out);
}
