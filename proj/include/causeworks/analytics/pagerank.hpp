#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "causeworks/causal_model.hpp"

namespace causeworks {

struct CentralityScores {
  std::map<NodeId, double> scores;
  double damping = 0.85;
  double tolerance = 1e-8;
  int iterations = 0;

  double at(const NodeId& id) const {
    auto it = scores.find(id);
    return it == scores.end() ? 0.0 : it->second;
  }
};

// Structural PageRank by power iteration. Edge weights are ignored, edges are
// followed in their drawn direction and the mass of nodes without outgoing
// edges is spread uniformly. Stops when the L1 change drops below tolerance.
inline CentralityScores pagerank(const CausalGraph& g, double damping = 0.85, double tolerance = 1e-8,
                                 int max_iterations = 10000) {
  if (g.empty()) throw Error(ErrorKind::invalid_argument, "pagerank of an empty graph");
  const std::size_t n = g.size();
  const double uniform = 1.0 / static_cast<double>(n);

  std::vector<std::size_t> out_degree(n, 0);
  for (std::size_t u = 0; u < n; ++u) out_degree[u] = g.out_edges(u).size();

  std::vector<double> rank(n, uniform), next(n);
  int it = 0;
  for (; it < max_iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      if (out_degree[u] == 0) dangling += rank[u];
    }
    const double base = (1.0 - damping) * uniform + damping * dangling * uniform;
    std::fill(next.begin(), next.end(), base);
    for (std::size_t u = 0; u < n; ++u) {
      if (out_degree[u] == 0) continue;
      const double share = damping * rank[u] / static_cast<double>(out_degree[u]);
      for (std::size_t e : g.out_edges(u)) next[*g.index_of(g.edges()[e].target)] += share;
    }
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) delta += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (delta < tolerance) {
      ++it;
      break;
    }
  }

  CentralityScores out;
  out.damping = damping;
  out.tolerance = tolerance;
  out.iterations = it;
  for (std::size_t v = 0; v < n; ++v) out.scores.emplace(g.nodes()[v].id, rank[v]);
  return out;
}

}  // namespace causeworks
