#include <gtest/gtest.h>

#include <filesystem>

#include "helpers.hpp"
#include "mtlqg/io.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;
using mtlqg::testing::fixture;

namespace {

bool same(const ProblemData& a, const ProblemData& b) {
  if (a.horizon != b.horizon || a.dag.edges() != b.dag.edges()) return false;
  if (a.dims.x != b.dims.x || a.dims.u != b.dims.u || a.dims.y != b.dims.y) return false;
  for (int t = 0; t < a.horizon; ++t) {
    const StepData &s = a.steps[t], &r = b.steps[t];
    if (s.A != r.A || s.B != r.B || s.C != r.C || s.Q != r.Q || s.R != r.R || s.S != r.S ||
        s.W != r.W || s.V != r.V || s.U != r.U) {
      return false;
    }
  }
  return a.sigma_init == b.sigma_init && a.p_final == b.p_final;
}

Json small_problem() {
  return Json::parse(R"({
    "schema": "mtlqg.problem/1",
    "graph": {"n": 2, "edges": [[1, 2]]},
    "horizon": 1,
    "dims": {"x": [1, 1], "u": [1, 1], "y": [1, 1]},
    "steps": [{"t": 0,
               "A": [{"block": [2, 1], "rows": 1, "cols": 1, "data": [0.5]}],
               "R": [{"block": [1, 1], "rows": 1, "cols": 1, "data": [1]},
                     {"block": [2, 2], "rows": 1, "cols": 1, "data": [1]}]}],
    "sigma_init": [{"block": [1, 1], "rows": 1, "cols": 1, "data": [1]},
                   {"block": [2, 2], "rows": 1, "cols": 1, "data": [1]}]
  })");
}

}  // namespace

TEST(Io, ProblemRoundTrip) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ProblemData p = instance_family(seed, 6)[seed].problem;
    const ProblemData q = problem_from_json(problem_to_json(p));
    EXPECT_TRUE(same(p, q));
    EXPECT_EQ(problem_to_json(q), problem_to_json(p));
  }
}

TEST(Io, FileRoundTrip) {
  const ProblemData p = read_problem(fixture("five_node.json"));
  const std::string path = (std::filesystem::temp_directory_path() / "mtlqg_io_roundtrip.json").string();
  write_problem(path, p);
  EXPECT_TRUE(same(read_problem(path), p));
  std::filesystem::remove(path);
}

TEST(Io, OmittedBlocksAreZero) {
  const ProblemData p = problem_from_json(small_problem());
  EXPECT_EQ(p.steps[0].A(1, 0), 0.5);
  EXPECT_EQ(p.steps[0].A(0, 0), 0.0);
  EXPECT_EQ(p.steps[0].Q.squaredNorm(), 0.0);
  EXPECT_EQ(p.p_final.squaredNorm(), 0.0);
  EXPECT_TRUE(validate(p).empty());
}

TEST(Io, ParseErrors) {
  Json j = small_problem();
  j.erase("horizon");
  EXPECT_THROW(problem_from_json(j), ParseError);

  j = small_problem();
  j["steps"][0]["Z"] = Json::array();
  EXPECT_THROW(problem_from_json(j), ParseError);

  j = small_problem();
  j["steps"][0]["A"][0]["data"] = {1.0, 2.0};
  EXPECT_THROW(problem_from_json(j), ParseError);

  j = small_problem();
  j["graph"]["edges"] = Json::parse("[[2, 1]]");
  EXPECT_THROW(problem_from_json(j), ParseError);

  j = small_problem();
  j["steps"][0]["A"][0]["block"] = {3, 1};
  EXPECT_THROW(problem_from_json(j), ParseError);

  j = small_problem();
  j["schema"] = "something/2";
  EXPECT_THROW(problem_from_json(j), ParseError);

  j = small_problem();
  j["graph"]["n"] = "two";
  EXPECT_THROW(problem_from_json(j), ParseError);

  EXPECT_THROW(read_problem("/nonexistent/problem.json"), ParseError);
}

TEST(Io, StructuredGainsRoundTrip) {
  const ProblemData p = read_problem(fixture("four_node.json"));
  const StructuredGains g = fit_estimator_gains(p, random_structured_gains(p, 3));
  const GainsFile f = gains_from_json(p, gains_to_json(g));
  ASSERT_TRUE(f.structured);
  for (int t = 0; t < p.horizon; ++t) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_EQ(f.gains.L[t][j], g.L[t][j]);
      for (int i = 0; i < 4; ++i) EXPECT_EQ(f.gains.K[t][i][j], g.K[t][i][j]);
    }
  }
}

TEST(Io, LinearStrategyRoundTrip) {
  const ProblemData p = read_problem(fixture("four_node.json"));
  const LinearStrategy s = random_strategy(p, 4);
  const GainsFile f = gains_from_json(p, gains_to_json(s));
  ASSERT_FALSE(f.structured);
  for (int t = 0; t < p.horizon; ++t) {
    for (int r = 0; r < t; ++r) EXPECT_EQ(f.strategy.gain[t][r], s.gain[t][r]);
  }
}

TEST(Io, GainsMismatchRejected) {
  const ProblemData four = read_problem(fixture("four_node.json"));
  const ProblemData five = read_problem(fixture("five_node.json"));
  const Json g = gains_to_json(random_structured_gains(five, 1));
  EXPECT_THROW(gains_from_json(four, g), std::invalid_argument);
  Json bad = gains_to_json(random_structured_gains(four, 1));
  bad["kind"] = "other";
  EXPECT_THROW(gains_from_json(four, bad), ParseError);
}
