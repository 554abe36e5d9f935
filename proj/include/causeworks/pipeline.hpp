#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "causeworks/analytics/pagerank.hpp"
#include "causeworks/analytics/spikes.hpp"
#include "causeworks/causal_model.hpp"
#include "causeworks/propagation.hpp"

namespace causeworks {

enum class ClauseCategory { cause_effect, correlation, life_cycle, connectivity };

// Finer distinction inside a category. Only clauses with the same role (and
// for life-cycle clauses the same trend) are merged by aggregation.
enum class ClauseRole { effect, max_rise, max_fall, correlated, trend, disconnected };

enum class Trend { rising, falling, flat, spiking };

inline const char* to_string(ClauseCategory c) {
  switch (c) {
    case ClauseCategory::cause_effect: return "cause-effect";
    case ClauseCategory::correlation: return "correlation";
    case ClauseCategory::life_cycle: return "life-cycle";
    case ClauseCategory::connectivity: return "connectivity";
  }
  return "?";
}

inline const char* to_string(ClauseRole r) {
  switch (r) {
    case ClauseRole::effect: return "effect";
    case ClauseRole::max_rise: return "max-rise";
    case ClauseRole::max_fall: return "max-fall";
    case ClauseRole::correlated: return "correlated";
    case ClauseRole::trend: return "trend";
    case ClauseRole::disconnected: return "disconnected";
  }
  return "?";
}

inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::rising: return "rising";
    case Trend::falling: return "falling";
    case Trend::flat: return "flat";
    case Trend::spiking: return "spiking";
  }
  return "?";
}

// Path / weight / time metadata carried by a clause.
struct ClausePayload {
  std::map<NodeId, double> net_changes;
  std::vector<CausalPath> paths;
  bool paths_truncated = false;
  std::vector<double> path_weights;  // edge weights along the first path
  std::vector<double> hop_deltas;    // of the primary node
  std::optional<Trend> trend;
  std::vector<Spike> spikes;
  std::vector<int> change_steps;     // steps where the primary node moved
};

// Each term already normalised to [0,1]; focus marks clauses that mention an
// intervention or objective.
struct DoiFeatures {
  double magnitude = 0.0;
  double occurrence = 0.0;
  double centrality = 0.0;
  bool focus = false;
};

struct Clause {
  ClauseCategory category = ClauseCategory::cause_effect;
  ClauseRole role = ClauseRole::effect;
  std::vector<NodeId> subjects;
  std::vector<NodeId> objects;  // empty when the clause has no object
  NodeId primary;               // process the clause is grouped under
  ClausePayload payload;
  DoiFeatures features;
  double doi = 0.0;
};

struct DoiWeights {
  double alpha = 0.5;  // magnitude of change
  double beta = 0.2;   // occurrence count
  double gamma = 0.3;  // centrality

  void validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || std::abs(alpha + beta + gamma - 1.0) > 1e-9) {
      throw Error(ErrorKind::invalid_argument, "DOI weights must be non-negative and sum to 1");
    }
  }
};

inline constexpr double kFocusBias = 1.0;

inline double doi_score(const Clause& clause, const DoiWeights& w = {}) {
  const auto& f = clause.features;
  return w.alpha * f.magnitude + w.beta * f.occurrence + w.gamma * f.centrality + (f.focus ? kFocusBias : 0.0);
}

struct ExtractionOptions {
  DoiWeights weights;
  double trend_epsilon = 1.0;  // percentage points
  double spike_theta = kDefaultSpikeTheta;
  bool correlations = true;
};

inline Trend classify_trend(std::span<const double> series, double epsilon = 1.0,
                            double theta = kDefaultSpikeTheta) {
  if (!detect_spikes(series, theta).empty()) return Trend::spiking;
  const double net = net_change(series);
  if (net > epsilon) return Trend::rising;
  if (net < -epsilon) return Trend::falling;
  return Trend::flat;
}

namespace detail {

inline std::size_t count_moves(std::span<const double> series) {
  std::size_t n = 0;
  for (std::size_t t = 1; t < series.size(); ++t) n += series[t] != series[t - 1];
  return n;
}

inline std::vector<int> change_steps(std::span<const double> series) {
  std::vector<int> out;
  for (std::size_t t = 1; t < series.size(); ++t) {
    if (series[t] != series[t - 1]) out.push_back(static_cast<int>(t));
  }
  return out;
}

// Same-sign moves at exactly the same steps.
inline bool synchronized(std::span<const double> a, std::span<const double> b) {
  bool any = false;
  for (std::size_t t = 1; t < a.size(); ++t) {
    const double da = a[t] - a[t - 1];
    const double db = b[t] - b[t - 1];
    if ((da == 0.0) != (db == 0.0)) return false;
    if (da == 0.0) continue;
    if ((da > 0) != (db > 0)) return false;
    any = true;
  }
  return any;
}

inline std::vector<double> path_weights(const CausalGraph& g, const CausalPath& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto u = *g.index_of(path[i]);
    for (std::size_t e : g.out_edges(u)) {
      if (g.edges()[e].target == path[i + 1]) {
        out.push_back(g.edges()[e].weight);
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

inline void check_trace_matches(const CausalGraph& g, const PropagationTrace& trace) {
  bool ok = trace.series.size() == g.size();
  for (const auto& n : g.nodes()) {
    auto it = trace.series.find(n.id);
    if (it == trace.series.end() || it->second.size() != static_cast<std::size_t>(trace.horizon) + 1) {
      ok = false;
      break;
    }
  }
  if (!ok) throw Error(ErrorKind::invalid_argument, "trace does not match graph");
}

// Candidate clauses for every information category, scored with doi_score.
inline std::vector<Clause> extract_clauses(const CausalGraph& g, const PropagationTrace& trace,
                                           std::span<const InterventionSpec> interventions,
                                           const ObjectiveSet& objectives, const CentralityScores& centrality,
                                           const ExtractionOptions& opts = {}) {
  check_trace_matches(g, trace);
  validate_objectives(g, objectives);
  opts.weights.validate();
  const auto sources = intervention_nodes(interventions);
  for (const auto& s : sources) {
    if (!g.contains(s)) throw Error(ErrorKind::not_found, "intervention on unknown node '" + s + "'");
  }
  const std::set<NodeId> focus(sources.begin(), sources.end());
  std::set<NodeId> focus_all = focus;
  focus_all.insert(objectives.nodes.begin(), objectives.nodes.end());

  double max_change = 0.0;
  std::size_t max_moves = 0;
  for (const auto& [_, s] : trace.series) {
    max_change = std::max(max_change, std::abs(net_change(s)));
    max_moves = std::max(max_moves, detail::count_moves(s));
  }
  auto norm_change = [&](const NodeId& id) {
    return max_change > 0 ? std::abs(net_change(trace.at(id))) / max_change : 0.0;
  };
  auto norm_moves = [&](const NodeId& id) {
    return max_moves > 0 ? static_cast<double>(detail::count_moves(trace.at(id))) / max_moves : 0.0;
  };

  std::vector<Clause> out;
  auto emit = [&](Clause c) {
    c.features.magnitude = norm_change(c.primary);
    c.features.occurrence = norm_moves(c.primary);
    c.features.centrality = centrality.at(c.primary);
    c.features.focus = false;
    for (const auto* list : {&c.subjects, &c.objects}) {
      for (const auto& id : *list) c.features.focus |= focus_all.count(id) > 0;
    }
    c.features.focus |= focus_all.count(c.primary) > 0;
    const auto& s = trace.at(c.primary);
    c.payload.hop_deltas = hop_changes(s);
    c.payload.change_steps = detail::change_steps(s);
    c.doi = doi_score(c, opts.weights);
    out.push_back(std::move(c));
  };

  // Cause-effect and connectivity, one clause per (intervention, objective).
  for (const auto& src : sources) {
    for (const auto& obj : objectives.nodes) {
      auto paths = causal_paths(g, src, obj);
      Clause c;
      c.subjects = {src};
      c.objects = {obj};
      c.primary = obj;
      c.payload.net_changes = {{src, net_change(trace.at(src))}, {obj, net_change(trace.at(obj))}};
      if (!paths.paths.empty() && src != obj) {
        c.category = ClauseCategory::cause_effect;
        c.role = ClauseRole::effect;
        c.payload.path_weights = detail::path_weights(g, paths.paths.front());
        c.payload.paths = std::move(paths.paths);
        c.payload.paths_truncated = paths.truncated;
      } else if (paths.paths.empty()) {
        c.category = ClauseCategory::connectivity;
        c.role = ClauseRole::disconnected;
      } else {
        continue;
      }
      emit(std::move(c));
    }
  }

  // Life cycle: one trend per node.
  for (const auto& n : g.nodes()) {
    const auto& s = trace.at(n.id);
    Clause c;
    c.category = ClauseCategory::life_cycle;
    c.role = ClauseRole::trend;
    c.subjects = {n.id};
    c.primary = n.id;
    c.payload.trend = classify_trend(s, opts.trend_epsilon, opts.spike_theta);
    c.payload.spikes = detect_spikes(s, opts.spike_theta);
    c.payload.net_changes = {{n.id, net_change(s)}};
    emit(std::move(c));
  }

  // Largest rise and fall over the whole network, interventions excluded.
  std::optional<std::pair<NodeId, double>> rise, fall;
  for (const auto& [id, s] : trace.series) {
    if (focus.count(id)) continue;
    const double d = net_change(s);
    if (d > 0 && (!rise || d > rise->second)) rise = {{id, d}};
    if (d < 0 && (!fall || d < fall->second)) fall = {{id, d}};
  }
  for (const auto& [role, pick] : {std::pair{ClauseRole::max_rise, rise}, std::pair{ClauseRole::max_fall, fall}}) {
    if (!pick) continue;
    Clause c;
    c.category = ClauseCategory::cause_effect;
    c.role = role;
    c.subjects = {pick->first};
    c.primary = pick->first;
    c.payload.net_changes = {{pick->first, pick->second}};
    emit(std::move(c));
  }

  // Correlation: synchronized moves between causally unrelated nodes.
  // Intervened nodes move by fiat and are left out.
  if (opts.correlations) {
    std::vector<NodeId> moving;
    for (const auto& [id, s] : trace.series) {
      if (is_all_zero(s) || std::find(sources.begin(), sources.end(), id) != sources.end()) continue;
      moving.push_back(id);
    }
    for (std::size_t i = 0; i < moving.size(); ++i) {
      for (std::size_t j = i + 1; j < moving.size(); ++j) {
        const auto& a = moving[i];
        const auto& b = moving[j];
        if (!detail::synchronized(trace.at(a), trace.at(b))) continue;
        if (has_path(g, a, b) || has_path(g, b, a)) continue;
        Clause c;
        c.category = ClauseCategory::correlation;
        c.role = ClauseRole::correlated;
        c.subjects = {a};
        c.objects = {b};
        c.primary = a;
        c.payload.net_changes = {{a, net_change(trace.at(a))}, {b, net_change(trace.at(b))}};
        emit(std::move(c));
      }
    }
  }
  return out;
}

struct ProcessGroup {
  NodeId process;
  std::vector<Clause> clauses;

  double max_doi() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& c : clauses) m = std::max(m, c.doi);
    return m;
  }
};

// Top-level containers are processes, each holding its clauses; ordering is
// descending DOI within and across groups.
struct DoiSceneGraph {
  std::vector<ProcessGroup> groups;

  bool empty() const { return groups.empty(); }

  std::size_t clause_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.clauses.size();
    return n;
  }

  std::vector<Clause> flatten() const {
    std::vector<Clause> out;
    for (const auto& g : groups) out.insert(out.end(), g.clauses.begin(), g.clauses.end());
    return out;
  }

  // Highest DOI of the clauses grouped under `process`, if any.
  std::optional<double> doi_of(const NodeId& process) const {
    for (const auto& g : groups) {
      if (g.process == process) return g.max_doi();
    }
    return std::nullopt;
  }
};

namespace detail {

inline auto clause_key(const Clause& c) {
  return std::tie(c.primary, c.category, c.role, c.subjects, c.objects);
}

inline bool clause_before(const Clause& a, const Clause& b) {
  if (a.doi != b.doi) return a.doi > b.doi;
  return clause_key(a) < clause_key(b);
}

}  // namespace detail

inline DoiSceneGraph build_scene_graph(std::vector<Clause> clauses) {
  std::stable_sort(clauses.begin(), clauses.end(), detail::clause_before);
  DoiSceneGraph scene;
  std::map<NodeId, std::size_t> slot;
  for (auto& c : clauses) {
    auto [it, inserted] = slot.try_emplace(c.primary, scene.groups.size());
    if (inserted) scene.groups.push_back({c.primary, {}});
    scene.groups[it->second].clauses.push_back(std::move(c));
  }
  // Clauses were already sorted, so the first group for each process sits at
  // its max DOI; a stable sort on that keeps the id tie-break.
  std::stable_sort(scene.groups.begin(), scene.groups.end(), [](const ProcessGroup& a, const ProcessGroup& b) {
    const double da = a.max_doi(), db = b.max_doi();
    if (da != db) return da > db;
    return a.process < b.process;
  });
  return scene;
}

namespace detail {

inline bool disjoint(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  }
  return true;
}

inline bool same_set(std::vector<NodeId> a, std::vector<NodeId> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

// Shared destination with disjoint sources, or shared sources with disjoint
// destinations. Disjointness keeps every atomic relation counted once.
inline bool mergeable(const Clause& a, const Clause& b) {
  if (a.category != b.category || a.role != b.role || a.payload.trend != b.payload.trend) return false;
  if (same_set(a.objects, b.objects) && disjoint(a.subjects, b.subjects)) return true;
  if (!a.objects.empty() && !b.objects.empty() && same_set(a.subjects, b.subjects) &&
      disjoint(a.objects, b.objects)) {
    return true;
  }
  return false;
}

inline void merge_into(Clause& into, const Clause& from) {
  if (same_set(into.objects, from.objects)) {
    into.subjects.insert(into.subjects.end(), from.subjects.begin(), from.subjects.end());
    std::sort(into.subjects.begin(), into.subjects.end());
  } else {
    into.objects.insert(into.objects.end(), from.objects.begin(), from.objects.end());
    std::sort(into.objects.begin(), into.objects.end());
  }
  auto& p = into.payload;
  const auto& q = from.payload;
  p.net_changes.insert(q.net_changes.begin(), q.net_changes.end());
  p.paths.insert(p.paths.end(), q.paths.begin(), q.paths.end());
  p.paths_truncated |= q.paths_truncated;
  p.spikes.insert(p.spikes.end(), q.spikes.begin(), q.spikes.end());
  std::set<int> steps(p.change_steps.begin(), p.change_steps.end());
  steps.insert(q.change_steps.begin(), q.change_steps.end());
  p.change_steps.assign(steps.begin(), steps.end());
  into.features.focus |= from.features.focus;
  into.doi = std::max(into.doi, from.doi);
}

}  // namespace detail

// Merges clauses of one category that share a destination (or a source set)
// until no pair is left to merge, then rebuilds the scene graph. The merged
// clause stays under the group of its highest-ranked member.
inline DoiSceneGraph aggregate(const DoiSceneGraph& scene) {
  auto clauses = scene.flatten();
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < clauses.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < clauses.size(); ++j) {
        if (!detail::mergeable(clauses[i], clauses[j])) continue;
        detail::merge_into(clauses[i], clauses[j]);
        clauses.erase(clauses.begin() + static_cast<std::ptrdiff_t>(j));
        changed = true;
        break;
      }
    }
  }
  return build_scene_graph(std::move(clauses));
}

struct AtomicRelation {
  ClauseCategory category;
  NodeId subject;
  std::optional<NodeId> object;

  friend auto operator<=>(const AtomicRelation&, const AtomicRelation&) = default;
};

// (category, subject, object) triples a clause stands for.
inline std::vector<AtomicRelation> atomic_relations(const Clause& c) {
  std::vector<AtomicRelation> out;
  for (const auto& s : c.subjects) {
    if (c.objects.empty()) {
      out.push_back({c.category, s, std::nullopt});
    } else {
      for (const auto& o : c.objects) out.push_back({c.category, s, o});
    }
  }
  return out;
}

inline std::multiset<AtomicRelation> atomic_relations(const DoiSceneGraph& scene) {
  std::multiset<AtomicRelation> out;
  for (const auto& g : scene.groups) {
    for (const auto& c : g.clauses) {
      for (auto& r : atomic_relations(c)) out.insert(std::move(r));
    }
  }
  return out;
}

}  // namespace causeworks
