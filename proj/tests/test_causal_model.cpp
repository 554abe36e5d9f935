#include <gtest/gtest.h>

#include <random>

#include "causeworks/causal_model.hpp"
#include "oracles.hpp"

using namespace causeworks;

namespace {

CausalGraph make(std::vector<std::string> ids, std::vector<CausalEdge> edges) {
  std::vector<ProcessNode> nodes;
  for (auto& id : ids) nodes.push_back({id, id + " label", 0.0});
  return CausalGraph(std::move(nodes), std::move(edges));
}

bool mentions(const ValidationReport& r, const std::string& text) {
  return r.summary().find(text) != std::string::npos;
}

}  // namespace

TEST(Validation, SelfLoopIsIrreflexiveViolation) {
  const auto g = make({"A"}, {{"A", "A", 0.5}});
  const auto r = validate_graph(g);
  EXPECT_TRUE(r.has(ViolationKind::self_loop));
  EXPECT_TRUE(mentions(r, "irreflexive violation at A"));
}

TEST(Validation, ThreeCycleReportedInOrder) {
  const auto g = make({"A", "B", "C"}, {{"A", "B", 0.1}, {"B", "C", 0.1}, {"C", "A", 0.1}});
  const auto r = validate_graph(g);
  ASSERT_EQ(r.cycles().size(), 1u);
  EXPECT_EQ(r.cycles()[0], (std::vector<NodeId>{"A", "B", "C"}));
  EXPECT_TRUE(mentions(r, "cycle [A,B,C]"));
}

TEST(Validation, CycleRotatedToSmallestId) {
  const auto g = make({"C", "B", "A"}, {{"B", "C", 0.1}, {"C", "A", 0.1}, {"A", "B", 0.1}});
  ASSERT_EQ(validate_graph(g).cycles().size(), 1u);
  EXPECT_EQ(validate_graph(g).cycles()[0].front(), "A");
}

TEST(Validation, ValidChainIsClean) {
  const auto g = make({"A", "B", "C"}, {{"A", "B", 0.5}, {"B", "C", -0.5}});
  EXPECT_TRUE(validate_graph(g).empty());
  EXPECT_NO_THROW(require_valid(g));
}

TEST(Validation, ReportsEveryViolationKind) {
  std::vector<ProcessNode> nodes{{"A", "a", 0}, {"A", "dup", 0}, {"B", "", 0}, {"C", "c", NAN}};
  std::vector<CausalEdge> edges{{"A", "Z", 0.1}, {"A", "B", 1.5}, {"A", "B", 0.2}, {"B", "C", INFINITY}};
  const auto r = validate_graph(CausalGraph(nodes, edges));
  EXPECT_TRUE(r.has(ViolationKind::duplicate_node));
  EXPECT_TRUE(mentions(r, "duplicate node id A"));
  EXPECT_TRUE(r.has(ViolationKind::empty_label));
  EXPECT_TRUE(r.has(ViolationKind::non_finite));
  EXPECT_TRUE(r.has(ViolationKind::dangling_edge));
  EXPECT_TRUE(r.has(ViolationKind::weight_range));
  EXPECT_TRUE(r.has(ViolationKind::duplicate_edge));
  EXPECT_FALSE(r.has(ViolationKind::cycle));
}

TEST(Validation, RequireValidThrowsCycleKind) {
  const auto g = make({"A", "B"}, {{"A", "B", 0.1}, {"B", "A", 0.1}});
  try {
    require_valid(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cycle);
  }
}

TEST(Validation, RandomDagsAreAcyclic) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto g = oracle::random_dag(rng, 2 + i % 9, 0.4);
    EXPECT_TRUE(validate_graph(g).empty()) << validate_graph(g).summary();
  }
}

TEST(Paths, DiamondEnumeratedLexicographically) {
  const auto g = make({"A", "C", "B", "D"}, {{"A", "C", 0.5}, {"A", "B", 0.5}, {"B", "D", 0.5}, {"C", "D", 0.5}});
  const auto ps = causal_paths(g, "A", "D");
  ASSERT_EQ(ps.paths.size(), 2u);
  EXPECT_EQ(ps.paths[0], (CausalPath{"A", "B", "D"}));
  EXPECT_EQ(ps.paths[1], (CausalPath{"A", "C", "D"}));
  EXPECT_FALSE(ps.truncated);
}

TEST(Paths, SameNodeAndUnreachable) {
  const auto g = make({"A", "B"}, {});
  EXPECT_EQ(causal_paths(g, "A", "A").paths, (std::vector<CausalPath>{{"A"}}));
  EXPECT_TRUE(causal_paths(g, "A", "B").paths.empty());
  EXPECT_THROW(causal_paths(g, "A", "Q"), Error);
}

TEST(Paths, LimitTruncates) {
  // Layered graph with 2^4 paths from s to t.
  std::vector<std::string> ids{"s", "t"};
  std::vector<CausalEdge> edges;
  std::string prev_a = "s", prev_b = "s";
  for (int layer = 0; layer < 4; ++layer) {
    const auto a = "a" + std::to_string(layer), b = "b" + std::to_string(layer);
    ids.push_back(a);
    ids.push_back(b);
    for (const auto& p : {prev_a, prev_b}) {
      edges.push_back({p, a, 0.5});
      edges.push_back({p, b, 0.5});
    }
    if (layer == 0) edges.resize(2);
    prev_a = a;
    prev_b = b;
  }
  edges.push_back({prev_a, "t", 0.5});
  edges.push_back({prev_b, "t", 0.5});
  const auto g = make(ids, edges);
  ASSERT_TRUE(validate_graph(g).empty());
  EXPECT_EQ(causal_paths(g, "s", "t").paths.size(), 16u);
  const auto capped = causal_paths(g, "s", "t", 5);
  EXPECT_EQ(capped.paths.size(), 5u);
  EXPECT_TRUE(capped.truncated);
}

TEST(Paths, MatchesExhaustiveSearchOnRandomDags) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 60; ++i) {
    const auto g = oracle::random_dag(rng, 3 + i % 7, 0.5);
    for (const auto& s : g.nodes()) {
      for (const auto& t : g.nodes()) {
        if (s.id == t.id) continue;
        EXPECT_EQ(causal_paths(g, s.id, t.id).paths, oracle::all_paths(g, s.id, t.id));
        EXPECT_EQ(has_path(g, s.id, t.id), !oracle::all_paths(g, s.id, t.id).empty());
      }
    }
  }
}

TEST(Selections, InterventionAndObjectiveChecks) {
  const auto g = make({"A", "B"}, {{"A", "B", 0.5}});
  std::vector<InterventionSpec> ok{{"A", 10, 0}};
  EXPECT_NO_THROW(validate_interventions(g, ok, 12));
  std::vector<InterventionSpec> unknown{{"Q", 10, 0}};
  EXPECT_THROW(validate_interventions(g, unknown, 12), Error);
  std::vector<InterventionSpec> big{{"A", 150, 0}};
  EXPECT_THROW(validate_interventions(g, big, 12), Error);
  std::vector<InterventionSpec> late{{"A", 10, 12}};
  EXPECT_THROW(validate_interventions(g, late, 12), Error);
  EXPECT_THROW(validate_objectives(g, {{"B", "B"}}), Error);
  EXPECT_THROW(validate_objectives(g, {{"Z"}}), Error);
  std::vector<InterventionSpec> twice{{"B", 1}, {"A", 1}, {"B", 2}};
  EXPECT_EQ(intervention_nodes(twice), (std::vector<NodeId>{"B", "A"}));
}
