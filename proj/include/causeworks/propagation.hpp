#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "causeworks/causal_model.hpp"

namespace causeworks {

inline constexpr int kDefaultHorizon = 12;
inline constexpr double kMaxChange = 100.0;

// Relative change (in percent) of every node over time steps 0..horizon.
// Index 0 is the pre-intervention state and is always zero.
struct PropagationTrace {
  int horizon = kDefaultHorizon;
  std::map<NodeId, std::vector<double>> series;
  bool clamped = false;  // some value hit +/-100 and was clipped

  const std::vector<double>& at(const NodeId& node) const {
    auto it = series.find(node);
    if (it == series.end()) throw Error(ErrorKind::not_found, "node '" + node + "' not in trace");
    return it->second;
  }

  friend bool operator==(const PropagationTrace&, const PropagationTrace&) = default;
};

// One-step-lag linear propagation:
//
//   value_v(t) = extern_v(t) + sum_{u->v} weight(u,v) * value_u(t-1)
//
// An intervention starting at step s is first observed at series index s+1;
// a point intervention contributes only there, a sustained one from there on.
// Values are clipped to [-100, 100] after every step.
inline PropagationTrace propagate(const CausalGraph& g, std::span<const InterventionSpec> interventions,
                                  int horizon = kDefaultHorizon) {
  if (horizon < 1) throw Error(ErrorKind::invalid_argument, "horizon must be >= 1");
  validate_interventions(g, interventions, horizon);

  const std::size_t n = g.size();
  std::vector<std::vector<double>> values(n, std::vector<double>(horizon + 1, 0.0));
  std::vector<std::vector<double>> external(n, std::vector<double>(horizon + 1, 0.0));
  for (const auto& iv : interventions) {
    auto& row = external[*g.index_of(iv.node)];
    const int first = iv.start + 1;
    if (iv.kind == InterventionKind::point) {
      row[first] += iv.delta;
    } else {
      for (int t = first; t <= horizon; ++t) row[t] += iv.delta;
    }
  }

  std::vector<std::size_t> edge_source(g.edges().size(), 0);
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    if (auto idx = g.index_of(g.edges()[e].source)) edge_source[e] = *idx;
  }

  bool clamped = false;
  for (int t = 1; t <= horizon; ++t) {
    for (std::size_t v = 0; v < n; ++v) {
      double acc = external[v][t];
      for (std::size_t e : g.in_edges(v)) {
        acc += g.edges()[e].weight * values[edge_source[e]][t - 1];
      }
      if (acc > kMaxChange || acc < -kMaxChange) {
        clamped = true;
        acc = std::clamp(acc, -kMaxChange, kMaxChange);
      }
      values[v][t] = acc;
    }
  }

  PropagationTrace trace;
  trace.horizon = horizon;
  trace.clamped = clamped;
  for (std::size_t v = 0; v < n; ++v) trace.series.emplace(g.nodes()[v].id, std::move(values[v]));
  return trace;
}

inline double net_change(std::span<const double> series) {
  if (series.empty()) return 0.0;
  return series.back() - series.front();
}

inline double net_change(const PropagationTrace& trace, const NodeId& node) {
  return net_change(trace.at(node));
}

inline std::vector<double> hop_changes(std::span<const double> series) {
  std::vector<double> out;
  for (std::size_t t = 1; t < series.size(); ++t) out.push_back(series[t] - series[t - 1]);
  return out;
}

inline std::vector<double> hop_changes(const PropagationTrace& trace, const NodeId& node) {
  return hop_changes(trace.at(node));
}

inline bool is_all_zero(std::span<const double> series) {
  return std::all_of(series.begin(), series.end(), [](double v) { return v == 0.0; });
}

}  // namespace causeworks
