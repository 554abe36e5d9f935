#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "causeworks/error.hpp"

namespace causeworks {

using NodeId = std::string;
using CausalPath = std::vector<NodeId>;

struct ProcessNode {
  NodeId id;
  std::string label;
  double baseline = 0.0;

  friend bool operator==(const ProcessNode&, const ProcessNode&) = default;
};

// Signed weight: the sign is the polarity of the link, the magnitude the
// fraction of the source's change passed on per time step.
struct CausalEdge {
  NodeId source;
  NodeId target;
  double weight = 0.0;

  friend bool operator==(const CausalEdge&, const CausalEdge&) = default;
};

enum class InterventionKind { point, sustained };

struct InterventionSpec {
  NodeId node;
  double delta = 0.0;  // signed percentage, -31 means -31%
  int start = 0;
  InterventionKind kind = InterventionKind::sustained;

  friend bool operator==(const InterventionSpec&, const InterventionSpec&) = default;
};

struct ObjectiveSet {
  std::vector<NodeId> nodes;

  friend bool operator==(const ObjectiveSet&, const ObjectiveSet&) = default;
};

inline constexpr std::size_t kMaxPathsPerPair = 10000;

// Immutable once constructed. The constructor accepts any node/edge lists so
// that validate_graph() can report on broken input; adjacency only covers
// edges whose endpoints resolve.
class CausalGraph {
 public:
  CausalGraph() = default;

  CausalGraph(std::vector<ProcessNode> nodes, std::vector<CausalEdge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      index_.try_emplace(nodes_[i].id, i);
    }
    out_.assign(nodes_.size(), {});
    in_.assign(nodes_.size(), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      auto s = index_of(edges_[e].source);
      auto t = index_of(edges_[e].target);
      if (!s || !t) continue;
      out_[*s].push_back(e);
      in_[*t].push_back(e);
    }
    // Successors in id order so every traversal is deterministic.
    for (auto& list : out_) {
      std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
        return edges_[a].target < edges_[b].target;
      });
    }
  }

  const std::vector<ProcessNode>& nodes() const { return nodes_; }
  const std::vector<CausalEdge>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  std::optional<std::size_t> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  const ProcessNode& node(std::string_view id) const {
    auto idx = index_of(id);
    if (!idx) throw Error(ErrorKind::not_found, "unknown node '" + std::string(id) + "'");
    return nodes_[*idx];
  }

  const std::string& label(std::string_view id) const { return node(id).label; }

  // Edge indices leaving / entering the node at `index`. Outgoing edges are
  // sorted by target id, incoming edges keep document order.
  std::span<const std::size_t> out_edges(std::size_t index) const { return out_[index]; }
  std::span<const std::size_t> in_edges(std::size_t index) const { return in_[index]; }

  friend bool operator==(const CausalGraph& a, const CausalGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<ProcessNode> nodes_;
  std::vector<CausalEdge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

enum class ViolationKind {
  duplicate_node,
  empty_label,
  non_finite,
  dangling_edge,
  self_loop,
  duplicate_edge,
  weight_range,
  cycle,
};

struct Violation {
  ViolationKind kind;
  std::vector<NodeId> ids;  // offending ids; for cycles the cycle in order
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool empty() const { return violations.empty(); }
  bool has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
  }
  std::vector<std::vector<NodeId>> cycles() const {
    std::vector<std::vector<NodeId>> out;
    for (const auto& v : violations) {
      if (v.kind == ViolationKind::cycle) out.push_back(v.ids);
    }
    return out;
  }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.message;
    }
    return out;
  }
};

namespace detail {

inline std::string join_ids(const std::vector<NodeId>& ids) {
  std::string out = "[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ",";
    out += ids[i];
  }
  return out + "]";
}

// Back-edge cycles found by a DFS that visits roots and successors in id
// order. Each cycle is rotated to start at its smallest id.
inline std::vector<std::vector<NodeId>> find_cycles(const CausalGraph& g) {
  enum Color : unsigned char { white, gray, black };
  std::vector<Color> color(g.size(), white);
  std::vector<std::size_t> stack;
  std::set<std::vector<NodeId>> found;

  std::vector<std::size_t> roots(g.size());
  for (std::size_t i = 0; i < roots.size(); ++i) roots[i] = i;
  std::sort(roots.begin(), roots.end(),
            [&](std::size_t a, std::size_t b) { return g.nodes()[a].id < g.nodes()[b].id; });

  std::function<void(std::size_t)> visit = [&](std::size_t u) {
    color[u] = gray;
    stack.push_back(u);
    for (std::size_t e : g.out_edges(u)) {
      const auto v = *g.index_of(g.edges()[e].target);
      if (v == u) continue;  // self loops are reported separately
      if (color[v] == gray) {
        auto it = std::find(stack.begin(), stack.end(), v);
        std::vector<NodeId> cycle;
        for (; it != stack.end(); ++it) cycle.push_back(g.nodes()[*it].id);
        std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
        found.insert(std::move(cycle));
      } else if (color[v] == white) {
        visit(v);
      }
    }
    stack.pop_back();
    color[u] = black;
  };

  for (std::size_t r : roots) {
    if (color[r] == white) visit(r);
  }
  return {found.begin(), found.end()};
}

}  // namespace detail

inline ValidationReport validate_graph(const CausalGraph& g) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::vector<NodeId> ids, std::string message) {
    report.violations.push_back({kind, std::move(ids), std::move(message)});
  };

  std::set<NodeId> seen;
  for (const auto& n : g.nodes()) {
    if (!seen.insert(n.id).second) add(ViolationKind::duplicate_node, {n.id}, "duplicate node id " + n.id);
    if (n.label.empty()) add(ViolationKind::empty_label, {n.id}, "empty label at " + n.id);
    if (!std::isfinite(n.baseline)) add(ViolationKind::non_finite, {n.id}, "non-finite baseline at " + n.id);
  }

  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& e : g.edges()) {
    const std::string name = e.source + "->" + e.target;
    bool dangling = false;
    for (const auto* end : {&e.source, &e.target}) {
      if (!g.contains(*end)) {
        add(ViolationKind::dangling_edge, {*end}, "edge " + name + " references unknown node " + *end);
        dangling = true;
      }
    }
    if (e.source == e.target) add(ViolationKind::self_loop, {e.source}, "irreflexive violation at " + e.source);
    if (!pairs.emplace(e.source, e.target).second && !dangling) {
      add(ViolationKind::duplicate_edge, {e.source, e.target}, "duplicate edge " + name);
    }
    if (!std::isfinite(e.weight)) {
      add(ViolationKind::non_finite, {e.source, e.target}, "non-finite weight on " + name);
    } else if (std::abs(e.weight) > 1.0) {
      add(ViolationKind::weight_range, {e.source, e.target}, "weight out of [-1,1] on " + name);
    }
  }

  for (auto& cycle : detail::find_cycles(g)) {
    std::string message = "cycle " + detail::join_ids(cycle);
    add(ViolationKind::cycle, std::move(cycle), std::move(message));
  }
  return report;
}

inline void require_valid(const CausalGraph& g) {
  auto report = validate_graph(g);
  if (report.empty()) return;
  const auto kind = report.has(ViolationKind::cycle) ? ErrorKind::cycle : ErrorKind::invalid_graph;
  throw Error(kind, report.summary());
}

struct PathSet {
  std::vector<CausalPath> paths;
  bool truncated = false;
};

// All simple directed paths from source to target in lexicographic order,
// capped at `limit`.
inline PathSet causal_paths(const CausalGraph& g, std::string_view source, std::string_view target,
                            std::size_t limit = kMaxPathsPerPair) {
  const auto s = g.index_of(source);
  const auto t = g.index_of(target);
  if (!s) throw Error(ErrorKind::not_found, "unknown node '" + std::string(source) + "'");
  if (!t) throw Error(ErrorKind::not_found, "unknown node '" + std::string(target) + "'");

  PathSet out;
  std::vector<std::size_t> path{*s};
  std::vector<bool> on_path(g.size(), false);
  on_path[*s] = true;

  std::function<void(std::size_t)> dfs = [&](std::size_t u) {
    if (out.truncated) return;
    if (u == *t) {
      if (out.paths.size() == limit) {
        out.truncated = true;
        return;
      }
      CausalPath p;
      p.reserve(path.size());
      for (std::size_t i : path) p.push_back(g.nodes()[i].id);
      out.paths.push_back(std::move(p));
      return;
    }
    for (std::size_t e : g.out_edges(u)) {
      const auto v = *g.index_of(g.edges()[e].target);
      if (on_path[v]) continue;
      on_path[v] = true;
      path.push_back(v);
      dfs(v);
      path.pop_back();
      on_path[v] = false;
    }
  };
  if (*s == *t) {
    out.paths.push_back({g.nodes()[*s].id});
    return out;
  }
  dfs(*s);
  return out;
}

// Nodes reachable from any of `sources` (sources included).
inline std::vector<bool> reachable_from(const CausalGraph& g, std::span<const NodeId> sources) {
  std::vector<bool> seen(g.size(), false);
  std::vector<std::size_t> stack;
  for (const auto& id : sources) {
    auto idx = g.index_of(id);
    if (!idx) throw Error(ErrorKind::not_found, "unknown node '" + id + "'");
    if (!seen[*idx]) {
      seen[*idx] = true;
      stack.push_back(*idx);
    }
  }
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (std::size_t e : g.out_edges(u)) {
      auto v = *g.index_of(g.edges()[e].target);
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

inline bool has_path(const CausalGraph& g, std::string_view from, std::string_view to) {
  const NodeId src(from);
  auto reach = reachable_from(g, std::span<const NodeId>(&src, 1));
  auto idx = g.index_of(to);
  if (!idx) throw Error(ErrorKind::not_found, "unknown node '" + std::string(to) + "'");
  return reach[*idx];
}

inline void validate_objectives(const CausalGraph& g, const ObjectiveSet& objectives) {
  std::set<NodeId> seen;
  for (const auto& id : objectives.nodes) {
    if (!g.contains(id)) throw Error(ErrorKind::not_found, "unknown objective node '" + id + "'");
    if (!seen.insert(id).second) throw Error(ErrorKind::invalid_argument, "duplicate objective '" + id + "'");
  }
}

inline void validate_interventions(const CausalGraph& g, std::span<const InterventionSpec> interventions,
                                   int horizon) {
  for (const auto& iv : interventions) {
    if (!g.contains(iv.node)) throw Error(ErrorKind::not_found, "intervention on unknown node '" + iv.node + "'");
    if (!std::isfinite(iv.delta) || iv.delta < -100.0 || iv.delta > 100.0) {
      throw Error(ErrorKind::invalid_argument, "intervention delta out of [-100,100] on '" + iv.node + "'");
    }
    if (iv.start < 0 || iv.start >= horizon) {
      throw Error(ErrorKind::invalid_argument, "intervention start outside [0,horizon) on '" + iv.node + "'");
    }
  }
}

// Distinct intervened nodes in first-appearance order.
inline std::vector<NodeId> intervention_nodes(std::span<const InterventionSpec> interventions) {
  std::vector<NodeId> out;
  for (const auto& iv : interventions) {
    if (std::find(out.begin(), out.end(), iv.node) == out.end()) out.push_back(iv.node);
  }
  return out;
}

}  // namespace causeworks
