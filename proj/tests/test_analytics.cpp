#include <gtest/gtest.h>

#include <random>

#include "causeworks/analytics/kmeans.hpp"
#include "causeworks/analytics/pagerank.hpp"
#include "causeworks/analytics/spikes.hpp"
#include "oracles.hpp"

using namespace causeworks;

namespace {

CausalGraph nodes_only(std::vector<std::string> ids, std::vector<CausalEdge> edges = {}) {
  std::vector<ProcessNode> nodes;
  for (auto& id : ids) nodes.push_back({id, id, 0.0});
  return CausalGraph(std::move(nodes), std::move(edges));
}

double total(const CentralityScores& s) {
  double t = 0;
  for (const auto& [_, v] : s.scores) t += v;
  return t;
}

}  // namespace

TEST(PageRank, SingleAndIsolated) {
  EXPECT_NEAR(pagerank(nodes_only({"A"})).at("A"), 1.0, 1e-12);
  const auto two = pagerank(nodes_only({"A", "B"}));
  EXPECT_NEAR(two.at("A"), 0.5, 1e-12);
  EXPECT_NEAR(two.at("B"), 0.5, 1e-12);
}

TEST(PageRank, ChainMatchesFrozenOracleValues) {
  // Values frozen from the dense power-iteration oracle: 20/57 and 37/57.
  const auto g = nodes_only({"A", "B"}, {{"A", "B", 0.3}});
  const auto pr = pagerank(g);
  EXPECT_GT(pr.at("B"), pr.at("A"));
  EXPECT_NEAR(pr.at("A"), 20.0 / 57.0, 1e-8);
  EXPECT_NEAR(pr.at("B"), 37.0 / 57.0, 1e-8);
  const auto o = oracle::pagerank(g);
  EXPECT_NEAR(o.at("A"), 20.0 / 57.0, 1e-12);
}

TEST(PageRank, EmptyGraphThrows) { EXPECT_THROW(pagerank(CausalGraph{}), Error); }

TEST(PageRank, WeightsIgnored) {
  const auto a = pagerank(nodes_only({"A", "B", "C"}, {{"A", "B", 0.1}, {"A", "C", 0.9}}));
  EXPECT_DOUBLE_EQ(a.at("B"), a.at("C"));
}

TEST(PageRank, VertexTransitiveIsUniform) {
  const auto ring = nodes_only({"a", "b", "c", "d", "e"},
                               {{"a", "b", 1}, {"b", "c", 1}, {"c", "d", 1}, {"d", "e", 1}, {"e", "a", 1}});
  for (const auto& [_, v] : pagerank(ring).scores) EXPECT_NEAR(v, 0.2, 1e-9);
}

TEST(PageRankProperty, SumsToOneAndMatchesOracle) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    const auto g = oracle::random_dag(rng, 1 + i % 12, 0.3);
    const auto pr = pagerank(g);
    EXPECT_NEAR(total(pr), 1.0, 1e-6);
    const auto o = oracle::pagerank(g);
    for (const auto& n : g.nodes()) {
      EXPECT_GT(pr.at(n.id), 0.0);
      EXPECT_NEAR(pr.at(n.id), o.at(n.id), 1e-8);
    }
  }
}

TEST(PageRankProperty, InboundEdgeNeverLowersTarget) {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const auto g = oracle::random_dag(rng, 3 + i % 8, 0.3);
    // Add u -> v for some non-adjacent pair that keeps the graph acyclic.
    for (const auto& u : g.nodes()) {
      for (const auto& v : g.nodes()) {
        if (u.id == v.id || has_path(g, v.id, u.id) || has_path(g, u.id, v.id)) continue;
        auto edges = g.edges();
        edges.push_back({u.id, v.id, 0.5});
        const CausalGraph h(g.nodes(), edges);
        EXPECT_GE(oracle::pagerank(h).at(v.id) + 1e-12, oracle::pagerank(g).at(v.id));
        EXPECT_GE(pagerank(h).at(v.id) + 1e-8, pagerank(g).at(v.id));
        ++checked;
        goto next;
      }
    }
  next:;
  }
  EXPECT_GT(checked, 10);
}

TEST(Clustering, TwoConstantGroups) {
  std::map<NodeId, Trajectory> s{{"a", Trajectory(13, 0.0)},
                                 {"b", Trajectory(13, 0.0)},
                                 {"c", Trajectory(13, 100.0)},
                                 {"d", Trajectory(13, 100.0)}};
  const auto r = cluster_trajectories(s);
  EXPECT_EQ(r.k, 2u);
  ASSERT_TRUE(r.silhouette);
  EXPECT_NEAR(*r.silhouette, 1.0, 1e-6);
  EXPECT_EQ(r.assignments.at("a"), r.assignments.at("b"));
  EXPECT_NE(r.assignments.at("a"), r.assignments.at("c"));
}

TEST(Clustering, IdenticalSeriesGiveOneCluster) {
  std::map<NodeId, Trajectory> s{{"a", {0, 1, 2}}, {"b", {0, 1, 2}}, {"c", {0, 1, 2}}};
  const auto r = cluster_trajectories(s);
  EXPECT_EQ(r.k, 1u);
  EXPECT_FALSE(r.silhouette);
  EXPECT_EQ(r.sizes(), (std::vector<std::size_t>{3}));
}

TEST(Clustering, ThreeTightGroups) {
  std::map<NodeId, Trajectory> s{{"a", {0, 0, 1}},      {"b", {0, 1, 0}},    {"c", {50, 50, 51}},
                                 {"d", {50, 51, 50}},   {"e", {100, 100, 99}}, {"f", {99, 100, 100}}};
  const auto r = cluster_trajectories(s);
  EXPECT_EQ(r.k, 3u);
  EXPECT_EQ(r.members(r.assignments.at("a")), (std::vector<NodeId>{"a", "b"}));
}

TEST(Clustering, TwoSeriesAreTwoClusters) {
  std::map<NodeId, Trajectory> s{{"a", {0, 1}}, {"b", {0, 5}}};
  EXPECT_EQ(cluster_trajectories(s).k, 2u);
}

TEST(Clustering, Errors) {
  EXPECT_THROW(cluster_trajectories({{"a", {0, 1}}}), Error);
  EXPECT_THROW(cluster_trajectories({{"a", {0, 1}}, {"b", {0}}}), Error);
  std::map<NodeId, Trajectory> s{{"a", {0}}, {"b", {1}}, {"c", {2}}};
  EXPECT_THROW(cluster_trajectories(s, KRange{2, 3}), Error);
  EXPECT_THROW(cluster_trajectories(s, KRange{1, 2}), Error);
  EXPECT_NO_THROW(cluster_trajectories(s, KRange{2, 2}));
}

TEST(Clustering, SilhouetteMatchesBruteForce) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + trial % 8;
    const std::size_t k = 2 + trial % std::min<std::size_t>(3, n - 2);
    std::vector<Trajectory> pts(n, Trajectory(5));
    for (auto& p : pts) {
      for (auto& v : p) v = noise(rng);
    }
    std::vector<std::size_t> a(n);
    std::vector<int> ai(n);
    for (std::size_t i = 0; i < n; ++i) ai[i] = static_cast<int>(a[i] = i % k);
    EXPECT_NEAR(silhouette(pts, a, k), oracle::silhouette(pts, ai), 1e-9);
  }
}

TEST(KMeansProperty, ObjectiveNonIncreasingAndFixedPoint) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + trial % 20;
    std::vector<Trajectory> pts(n, Trajectory(8));
    for (auto& p : pts) {
      for (auto& v : p) v = noise(rng);
    }
    const std::size_t k = 2 + trial % 3;
    const auto run = kmeans(pts, k, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 1; i < run.objective_history.size(); ++i) {
      EXPECT_LE(run.objective_history[i], run.objective_history[i - 1] + 1e-9);
    }
    ASSERT_LT(run.iterations, kMaxKMeansIterations);
    for (std::size_t i = 0; i < n; ++i) {
      const double own = squared_distance(pts[i], run.centroids[run.assignment[i]]);
      for (const auto& c : run.centroids) EXPECT_LE(own, squared_distance(pts[i], c) + 1e-9);
    }
  }
}

TEST(KMeans, SeedDeterminism) {
  std::vector<Trajectory> pts{{0, 0}, {1, 1}, {10, 10}, {11, 11}, {5, 5}};
  const auto a = kmeans(pts, 2, 42);
  const auto b = kmeans(pts, 2, 42);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.centroids, b.centroids);
}

TEST(Spikes, Examples) {
  EXPECT_TRUE(detect_spikes(std::vector<double>{5, 5, 5, 5}).empty());
  const auto s = detect_spikes(std::vector<double>{0, 0, 0, 50, 50}, 0.4);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].step, 3);
  EXPECT_EQ(s[0].direction, SpikeDirection::rise);
  EXPECT_EQ(s[0].magnitude, 50.0);
  EXPECT_TRUE(detect_spikes(std::vector<double>{0, 10, 20, 30, 40}, 0.4).empty());
  const auto f = detect_spikes(std::vector<double>{10, 10, -30, -30});
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].direction, SpikeDirection::fall);
  EXPECT_TRUE(detect_spikes(std::vector<double>{1}).empty());
}

TEST(SpikesProperty, ScaleInvariant) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> v(-50, 50), scale(0.01, 100);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> s(13);
    for (auto& x : s) x = v(rng);
    const double c = std::ldexp(1.0, static_cast<int>(scale(rng)) % 20 - 10);  // power of two: exact scaling
    auto scaled = s;
    for (auto& x : scaled) x *= c;
    auto a = detect_spikes(s), b = detect_spikes(scaled);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].step, b[k].step);
      EXPECT_EQ(a[k].direction, b[k].direction);
    }
  }
}
