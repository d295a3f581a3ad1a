#include <gtest/gtest.h>

#include <set>

#include "helpers.hpp"
#include "mtlqg/io.hpp"
#include "mtlqg/verify.hpp"

using namespace mtlqg;
using mtlqg::testing::fixture;

namespace {

Json without_runtime(const ExperimentReport& r) {
  Json j = report_to_json(r);
  j.erase("runtime_seconds");
  return j;
}

}  // namespace

TEST(Verify, ReportsAreReproducible) {
  const Instance a = make_instance("random", 4, 3, 77);
  const Instance b = make_instance("random", 4, 3, 77);
  EXPECT_EQ(without_runtime(run_theorem1(a)), without_runtime(run_theorem1(b)));
  EXPECT_EQ(without_runtime(run_theorem2(a, 5)), without_runtime(run_theorem2(b, 5)));
  EXPECT_EQ(without_runtime(run_six_node(3)), without_runtime(run_six_node(3)));
  EXPECT_EQ(report_to_json(run_theorem1(a))["seed"], 77);
}

TEST(Verify, InstanceFamilyCoversFamilies) {
  const auto inst = instance_family(1, 12);
  ASSERT_EQ(inst.size(), 12u);
  std::set<std::string> families;
  for (const Instance& i : inst) {
    families.insert(i.family);
    EXPECT_TRUE(check_assumptions(i.problem).a2);
    EXPECT_LE(i.problem.horizon, 5);
    EXPECT_LE(i.problem.dag.size(), 5);
  }
  EXPECT_EQ(families.size(), 6u);
}

TEST(Verify, NegativeControlFixture) {
  const ProblemData p = read_problem(fixture("negative_control.json"));
  EXPECT_GT(structure_residuals(p).max_residual, 1e-2);
  EXPECT_LE(structure_residuals(decorrelate_noise(p)).max_residual, 1e-6);
  EXPECT_LE(structure_residuals(decouple_cost(p)).max_residual, 1e-6);
  const ExperimentReport r = run_negative_control(p);
  EXPECT_FALSE(r.gated());
  EXPECT_TRUE(r.pass());
}

TEST(Verify, StructureCheckFlagsAssumptionFailure) {
  const Instance inst{"negative", 0, read_problem(fixture("negative_control.json"))};
  EXPECT_FALSE(run_theorem1(inst).pass());
}

// Passes A2' pair by pair; the optimum is unique and certified, yet node 3
// uses its measurement to track node 4.
TEST(Verify, CrossCoupledInstanceBreaksStructure) {
  const Instance inst{"cross", 0, read_problem(fixture("a2prime_cross_coupling.json"))};
  const ExperimentReport r = run_theorem1(inst);
  EXPECT_FALSE(r.pass());
  EXPECT_GT(r.metric("max structure residual"), 1e-1);
  EXPECT_EQ(r.metric("oracle certificate"), 0.0);
  EXPECT_EQ(r.metric("A2' cross coupling"), 1.0);
  EXPECT_TRUE(run_theorem2(inst, 9).pass());
}

TEST(Verify, FixturesPassStructureTests) {
  for (const char* name : {"five_node.json", "four_node.json"}) {
    const Instance inst{name, 0, read_problem(fixture(name))};
    EXPECT_TRUE(run_theorem1(inst).pass()) << name;
    EXPECT_TRUE(run_theorem2(inst, 9).pass()) << name;
  }
}

TEST(Verify, ExamplesPass) {
  for (const ExperimentReport& r : run_examples(2)) EXPECT_TRUE(r.pass()) << r.id;
}

TEST(Verify, LemmaBatteryCountsDiamonds) {
  const Dag diamond = Dag::from_one_based(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
  const ExperimentReport r = run_lemma_battery({five_node_dag(), diamond}, {}, 1);
  EXPECT_EQ(r.metric("graphs skipped (not multitrees)"), 1.0);
  EXPECT_TRUE(r.pass());
}

TEST(Verify, MetricLookup) {
  ExperimentReport r;
  r.add("a", 1.0, 0.5);
  r.info("b", 2.0);
  EXPECT_FALSE(r.pass());
  EXPECT_EQ(r.metric("b"), 2.0);
  EXPECT_THROW(r.metric("c"), std::out_of_range);
}
