#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "causeworks/analytics/kmeans.hpp"
#include "causeworks/analytics/pagerank.hpp"
#include "causeworks/analytics/spikes.hpp"
#include "causeworks/causal_model.hpp"
#include "causeworks/pipeline.hpp"
#include "causeworks/propagation.hpp"
#include "causeworks/sentence_plan.hpp"
#include "causeworks/wiki.hpp"

namespace causeworks {

struct ModuleOptions {
  std::size_t major_effect_count = 3;
  double pagerank_percentile = 0.5;  // share of each cluster named in text
  std::size_t max_trend_clusters = 3;
  double spike_theta = kDefaultSpikeTheta;
  double shape_epsilon = 1.0;
  std::size_t max_correlations = 3;
  std::uint64_t seed = kDefaultSeed;
};

// A set of interventions explained together against a set of objectives.
struct EffectGroup {
  std::vector<NodeId> sources;
  std::vector<NodeId> targets;
  std::set<NodeId> path_nodes;  // union over every causal path in the group
};

namespace detail {

inline SlotItem node_item(const CausalGraph& g, const NodeId& id, bool emphasis) {
  SlotItem item;
  item.text = g.label(id);
  item.node = id;
  item.emphasis = emphasis;
  return item;
}

inline double intervention_total(std::span<const InterventionSpec> interventions, const NodeId& node) {
  double total = 0.0;
  for (const auto& iv : interventions) {
    if (iv.node == node) total += iv.delta;
  }
  return total;
}

inline std::set<NodeId> focus_nodes(std::span<const InterventionSpec> interventions, const ObjectiveSet& objectives) {
  std::set<NodeId> out(objectives.nodes.begin(), objectives.nodes.end());
  for (const auto& iv : interventions) out.insert(iv.node);
  return out;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace detail

// Groups (intervention, objective) pairs that are connected by a causal path.
// Per objective, sources whose path-node sets intersect are merged; then
// objectives whose merged source sets are equal are merged. A node that is
// both intervention and objective counts as connected to itself.
inline std::vector<EffectGroup> effect_groups(const CausalGraph& g, std::span<const InterventionSpec> interventions,
                                              const ObjectiveSet& objectives) {
  const auto sources = intervention_nodes(interventions);
  auto rank_of = [&](const NodeId& id) {
    return static_cast<std::size_t>(std::find(sources.begin(), sources.end(), id) - sources.begin());
  };

  struct Entry {
    std::vector<NodeId> sources;
    std::vector<NodeId> targets;
    std::set<NodeId> path_nodes;
  };
  std::vector<Entry> entries;

  // Pass 1: per objective, merge sources sharing a path node.
  for (const auto& target : objectives.nodes) {
    std::vector<NodeId> connected;
    std::vector<std::set<NodeId>> nodes;
    for (const auto& src : sources) {
      auto paths = causal_paths(g, src, target);
      if (paths.paths.empty()) continue;
      std::set<NodeId> on_path;
      for (const auto& p : paths.paths) on_path.insert(p.begin(), p.end());
      connected.push_back(src);
      nodes.push_back(std::move(on_path));
    }
    detail::DisjointSets sets(connected.size());
    for (std::size_t i = 0; i < connected.size(); ++i) {
      for (std::size_t j = i + 1; j < connected.size(); ++j) {
        const bool share = std::any_of(nodes[i].begin(), nodes[i].end(),
                                       [&](const NodeId& n) { return nodes[j].count(n) > 0; });
        if (share) sets.unite(i, j);
      }
    }
    std::map<std::size_t, Entry> by_root;
    for (std::size_t i = 0; i < connected.size(); ++i) {
      auto& e = by_root[sets.find(i)];
      e.sources.push_back(connected[i]);
      e.targets = {target};
      e.path_nodes.insert(nodes[i].begin(), nodes[i].end());
    }
    for (auto& [_, e] : by_root) entries.push_back(std::move(e));
  }

  // Pass 2: merge objectives explained by the same source set, repeated until
  // no two entries share a source set.
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < entries.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < entries.size(); ++j) {
        if (entries[i].sources != entries[j].sources) continue;
        entries[i].targets.insert(entries[i].targets.end(), entries[j].targets.begin(), entries[j].targets.end());
        entries[i].path_nodes.insert(entries[j].path_nodes.begin(), entries[j].path_nodes.end());
        entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
        break;
      }
    }
  }

  std::vector<EffectGroup> out;
  for (auto& e : entries) {
    std::sort(e.sources.begin(), e.sources.end(),
              [&](const NodeId& a, const NodeId& b) { return rank_of(a) < rank_of(b); });
    out.push_back({std::move(e.sources), std::move(e.targets), std::move(e.path_nodes)});
  }
  return out;
}

inline SentencePlan effect_plan(const CausalGraph& g, const PropagationTrace& trace,
                               std::span<const InterventionSpec> interventions, const EffectGroup& group) {
  SentencePlan plan;
  plan.module = ModuleKind::effect;
  plan.template_id = "effect";
  auto& sources = plan.slots["interventions"];
  for (const auto& s : group.sources) {
    auto item = detail::node_item(g, s, true);
    item.value = detail::intervention_total(interventions, s);
    sources.push_back(std::move(item));
  }
  auto& targets = plan.slots["objectives"];
  for (const auto& t : group.targets) {
    auto item = detail::node_item(g, t, true);
    item.trajectory = trace.at(t);
    targets.push_back(std::move(item));
  }
  return plan;
}

inline std::vector<SentencePlan> effect_sentences(const CausalGraph& g, const PropagationTrace& trace,
                                                  std::span<const InterventionSpec> interventions,
                                                  const ObjectiveSet& objectives) {
  std::vector<SentencePlan> out;
  for (const auto& group : effect_groups(g, interventions, objectives)) {
    out.push_back(effect_plan(g, trace, interventions, group));
  }
  return out;
}

// Intermediate path nodes (neither intervention nor objective) with the
// largest absolute net change; nothing when the group has no intermediates.
inline std::optional<SentencePlan> major_effect_plan(const CausalGraph& g, const PropagationTrace& trace,
                                                     const std::set<NodeId>& focus, const EffectGroup& group,
                                                     std::size_t top_m) {
  std::vector<NodeId> inner;
  for (const auto& n : group.path_nodes) {
    if (!focus.count(n)) inner.push_back(n);
  }
  if (inner.empty()) return std::nullopt;
  std::stable_sort(inner.begin(), inner.end(), [&](const NodeId& a, const NodeId& b) {
    return std::abs(net_change(trace.at(a))) > std::abs(net_change(trace.at(b)));
  });
  if (inner.size() > top_m) inner.resize(top_m);
  SentencePlan plan;
  plan.module = ModuleKind::major_effect;
  plan.template_id = "major-effect";
  auto& slot = plan.slots["nodes"];
  for (const auto& n : inner) {
    auto item = detail::node_item(g, n, false);
    item.trajectory = trace.at(n);
    slot.push_back(std::move(item));
  }
  return plan;
}

inline std::vector<SentencePlan> major_effect_sentences(const CausalGraph& g, const PropagationTrace& trace,
                                                        std::span<const InterventionSpec> interventions,
                                                        const ObjectiveSet& objectives,
                                                        std::size_t top_m = ModuleOptions{}.major_effect_count) {
  const auto focus = detail::focus_nodes(interventions, objectives);
  std::vector<SentencePlan> out;
  for (const auto& group : effect_groups(g, interventions, objectives)) {
    if (auto plan = major_effect_plan(g, trace, focus, group, top_m)) out.push_back(std::move(*plan));
  }
  return out;
}

// Objectives that never moved, plus (intervention, objective) pairs with no
// causal path. The pairs are compressed by counting, for every subset of the
// sorted source list, how many objectives it is exactly the disconnected
// source set of, and stating the most frequent tuples first.
inline std::vector<SentencePlan> no_effect_sentences(const CausalGraph& g, const PropagationTrace& trace,
                                                     std::span<const InterventionSpec> interventions,
                                                     const ObjectiveSet& objectives) {
  std::vector<SentencePlan> out;

  std::vector<NodeId> still;
  for (const auto& o : objectives.nodes) {
    if (is_all_zero(trace.at(o))) still.push_back(o);
  }
  if (!still.empty() && !interventions.empty()) {
    SentencePlan plan;
    plan.module = ModuleKind::no_effect;
    plan.template_id = "no-effect.unaffected";
    for (const auto& o : still) plan.slots["objectives"].push_back(detail::node_item(g, o, true));
    out.push_back(std::move(plan));
  }

  auto sources = intervention_nodes(interventions);
  std::sort(sources.begin(), sources.end());
  if (sources.size() > 20) throw Error(ErrorKind::invalid_argument, "too many interventions for n-gram grouping");

  // Disconnected-source bitmask per objective.
  std::map<std::uint32_t, std::size_t> exact_cover;  // subset mask -> #objectives
  std::vector<std::uint32_t> mask_of(objectives.nodes.size(), 0);
  for (std::size_t o = 0; o < objectives.nodes.size(); ++o) {
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (sources[s] == objectives.nodes[o]) continue;
      if (!has_path(g, sources[s], objectives.nodes[o])) mask_of[o] |= 1u << s;
    }
  }
  const std::uint32_t full = sources.empty() ? 0u : static_cast<std::uint32_t>((1ull << sources.size()) - 1);
  for (std::uint32_t subset = 1; subset <= full && subset != 0; ++subset) {
    std::size_t count = 0;
    for (auto m : mask_of) count += m == subset;
    if (count) exact_cover[subset] = count;
  }

  std::vector<std::pair<std::uint32_t, std::size_t>> tuples(exact_cover.begin(), exact_cover.end());
  std::stable_sort(tuples.begin(), tuples.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    const int pa = __builtin_popcount(a.first), pb = __builtin_popcount(b.first);
    if (pa != pb) return pa > pb;
    return a.first < b.first;
  });
  for (const auto& [subset, _] : tuples) {
    SentencePlan plan;
    plan.module = ModuleKind::no_effect;
    plan.template_id = "no-effect.disconnected";
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (subset & (1u << s)) plan.slots["interventions"].push_back(detail::node_item(g, sources[s], true));
    }
    for (std::size_t o = 0; o < objectives.nodes.size(); ++o) {
      if (mask_of[o] == subset) plan.slots["objectives"].push_back(detail::node_item(g, objectives.nodes[o], true));
    }
    out.push_back(std::move(plan));
  }
  return out;
}

// Largest positive and largest negative net change over every node,
// intervened nodes excluded.
inline std::vector<SentencePlan> max_effect_sentences(const CausalGraph& g, const PropagationTrace& trace,
                                                      std::span<const InterventionSpec> interventions,
                                                      const ObjectiveSet& objectives) {
  const auto sources = intervention_nodes(interventions);
  const std::set<NodeId> excluded(sources.begin(), sources.end());
  const auto focus = detail::focus_nodes(interventions, objectives);
  std::optional<std::pair<NodeId, double>> best_up, best_down;
  for (const auto& [id, s] : trace.series) {
    if (excluded.count(id)) continue;
    const double d = net_change(s);
    if (d > 0 && (!best_up || d > best_up->second)) best_up = {{id, d}};
    if (d < 0 && (!best_down || d < best_down->second)) best_down = {{id, d}};
  }
  std::vector<SentencePlan> out;
  for (const auto& [pick, id] : {std::pair{best_up, "max-effect.positive"}, std::pair{best_down, "max-effect.negative"}}) {
    if (!pick) continue;
    SentencePlan plan;
    plan.module = ModuleKind::max_effect;
    plan.template_id = id;
    auto item = detail::node_item(g, pick->first, focus.count(pick->first) > 0);
    item.trajectory = trace.at(pick->first);
    plan.slots["node"].push_back(std::move(item));
    out.push_back(std::move(plan));
  }
  return out;
}

enum class TrendShape { rising, falling, peak_then_decline, flat_then_rise };

inline const char* to_string(TrendShape s) {
  switch (s) {
    case TrendShape::rising: return "rising";
    case TrendShape::falling: return "falling";
    case TrendShape::peak_then_decline: return "peak-then-decline";
    case TrendShape::flat_then_rise: return "flat-then-rise";
  }
  return "?";
}

// Shape of a (centroid) trajectory. A rise that starts only after the first
// quarter of the horizon reads as flat-then-rise.
inline TrendShape classify_shape(std::span<const double> c, double epsilon = 1.0) {
  const std::size_t horizon = c.size() - 1;
  const auto peak = std::max_element(c.begin(), c.end());
  const double net = c.back() - c.front();
  if (*peak > epsilon && *peak - c.back() > epsilon) return TrendShape::peak_then_decline;
  if (net > 0) {
    const auto lead = static_cast<std::size_t>(std::ceil(static_cast<double>(horizon) / 4.0));
    bool flat = lead < horizon;
    for (std::size_t t = 1; t <= lead && t < c.size(); ++t) flat &= std::abs(c[t]) <= epsilon;
    return flat ? TrendShape::flat_then_rise : TrendShape::rising;
  }
  if (net < 0) return TrendShape::falling;
  return *std::min_element(c.begin(), c.end()) < -epsilon ? TrendShape::falling : TrendShape::rising;
}

struct TrendCluster {
  std::vector<NodeId> members;
  std::vector<NodeId> named;  // members passing the centrality filter
  TrendShape shape = TrendShape::rising;
};

struct TimeSeriesResult {
  std::vector<SentencePlan> plans;     // one per verbalised cluster
  std::vector<TrendCluster> clusters;  // parallel to plans
  std::vector<NodeId> important;       // named nodes, plan order
};

// Clusters the trajectories of every moving node, verbalises the
// largest clusters and names the most central members of each.
inline TimeSeriesResult time_series_sentences(const CausalGraph& g, const PropagationTrace& trace,
                                               std::span<const InterventionSpec> interventions,
                                               const ObjectiveSet& objectives, const CentralityScores& centrality,
                                               const ModuleOptions& opts = {}) {
  TimeSeriesResult result;
  std::map<NodeId, Trajectory> moving;
  for (const auto& [id, s] : trace.series) {
    if (!is_all_zero(s)) moving.emplace(id, s);
  }
  if (moving.size() < 2) return result;

  const auto clustering = cluster_trajectories(moving, std::nullopt, opts.seed);
  std::vector<std::size_t> order(clustering.k);
  std::iota(order.begin(), order.end(), 0);
  const auto sizes = clustering.sizes();
  auto first_member = [&](std::size_t c) {
    auto m = clustering.members(c);
    return m.empty() ? NodeId{} : m.front();
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return first_member(a) < first_member(b);
  });

  const auto focus = detail::focus_nodes(interventions, objectives);
  for (std::size_t c : order) {
    if (result.clusters.size() == opts.max_trend_clusters) break;
    if (sizes[c] == 0) continue;
    TrendCluster cluster;
    cluster.members = clustering.members(c);
    cluster.shape = classify_shape(clustering.centroids[c], opts.shape_epsilon);
    cluster.named = cluster.members;
    std::stable_sort(cluster.named.begin(), cluster.named.end(), [&](const NodeId& a, const NodeId& b) {
      return centrality.at(a) > centrality.at(b);
    });
    const auto keep = static_cast<std::size_t>(
        std::ceil(opts.pagerank_percentile * static_cast<double>(cluster.members.size())));
    cluster.named.resize(std::max<std::size_t>(1, std::min(keep, cluster.named.size())));

    SentencePlan plan;
    plan.module = ModuleKind::time_series;
    plan.template_id = "time-series";
    for (const auto& n : cluster.named) {
      auto item = detail::node_item(g, n, focus.count(n) > 0);
      item.sparkline = trace.at(n);
      plan.slots["nodes"].push_back(std::move(item));
      result.important.push_back(n);
    }
    plan.slots["verb"] = {text_item(cluster.named.size() == 1 ? "follows" : "follow")};
    plan.slots["shape"] = {text_item(to_string(cluster.shape))};
    plan.slots["horizon"] = {text_item(std::to_string(trace.horizon))};
    result.plans.push_back(std::move(plan));
    result.clusters.push_back(std::move(cluster));
  }
  return result;
}

inline std::vector<SentencePlan> spike_sentences(const CausalGraph& g, const PropagationTrace& trace,
                                                 std::span<const NodeId> important,
                                                 double theta = kDefaultSpikeTheta) {
  std::vector<SentencePlan> out;
  for (const auto& id : important) {
    for (const auto& spike : detect_spikes(trace.at(id), theta)) {
      SentencePlan plan;
      plan.module = ModuleKind::spike;
      plan.template_id = "spike";
      plan.slots["node"] = {detail::node_item(g, id, false)};
      plan.slots["direction"] = {text_item(to_string(spike.direction))};
      SlotItem magnitude;
      magnitude.value = spike.direction == SpikeDirection::rise ? spike.magnitude : -spike.magnitude;
      magnitude.show_sign = false;
      plan.slots["magnitude"] = {std::move(magnitude)};
      plan.slots["step"] = {text_item(std::to_string(spike.step))};
      out.push_back(std::move(plan));
    }
  }
  return out;
}

// Context paragraphs for nodes with a known summary. Any provider failure
// drops the whole module.
inline std::vector<SentencePlan> wiki_sentences(const CausalGraph& g, std::span<const NodeId> nodes,
                                                WikiSummaryProvider* provider) {
  std::vector<SentencePlan> out;
  if (!provider) return out;
  try {
    for (const auto& id : nodes) {
      auto text = provider->summary(g.label(id));
      if (!text || text->empty()) continue;
      SentencePlan plan;
      plan.module = ModuleKind::wiki;
      plan.template_id = "wiki";
      plan.slots["node"] = {detail::node_item(g, id, false)};
      plan.slots["summary"] = {text_item(truncate_summary(*text))};
      out.push_back(std::move(plan));
    }
  } catch (const Error& e) {
    spdlog::warn("wikification skipped: {}", e.what());
    return {};
  }
  return out;
}

inline std::vector<SentencePlan> correlation_sentences(const CausalGraph& g, const DoiSceneGraph& scene,
                                                       std::size_t limit = ModuleOptions{}.max_correlations) {
  std::vector<SentencePlan> out;
  for (const auto& group : scene.groups) {
    for (const auto& c : group.clauses) {
      if (c.category != ClauseCategory::correlation || out.size() == limit) continue;
      SentencePlan plan;
      plan.module = ModuleKind::correlation;
      plan.template_id = "correlation";
      for (const auto& s : c.subjects) plan.slots["subjects"].push_back(detail::node_item(g, s, false));
      for (const auto& o : c.objects) plan.slots["objects"].push_back(detail::node_item(g, o, false));
      out.push_back(std::move(plan));
    }
  }
  return out;
}

// Time-series sentences, each followed by the spike and summary sentences of
// the nodes it names.
inline std::vector<SentencePlan> interleave_trends(const TimeSeriesResult& ts, const std::vector<SentencePlan>& spikes,
                                                   const std::vector<SentencePlan>& wiki) {
  std::vector<SentencePlan> out;
  auto about = [](const SentencePlan& p) { return *p.slots.at("node").front().node; };
  for (std::size_t i = 0; i < ts.plans.size(); ++i) {
    out.push_back(ts.plans[i]);
    for (const auto& n : ts.clusters[i].named) {
      for (const auto& p : spikes) {
        if (about(p) == n) out.push_back(p);
      }
    }
    for (const auto& n : ts.clusters[i].named) {
      for (const auto& p : wiki) {
        if (about(p) == n) out.push_back(p);
      }
    }
  }
  return out;
}

}  // namespace causeworks
