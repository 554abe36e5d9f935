#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "causeworks/analytics/pagerank.hpp"
#include "causeworks/causal_model.hpp"
#include "causeworks/io.hpp"
#include "causeworks/modules.hpp"
#include "causeworks/pipeline.hpp"
#include "causeworks/propagation.hpp"
#include "causeworks/renderer.hpp"

namespace causeworks {

struct NarrativeRequest {
  std::vector<InterventionSpec> interventions;
  ObjectiveSet objectives;
  int horizon = kDefaultHorizon;
  NarrativeScope scope = NarrativeScope::cumulative;
  Budget budget = kDefaultBudget;
  std::uint64_t seed = kDefaultSeed;
  DoiWeights weights;
  ModuleOptions modules;
};

struct NarrativeResult {
  PropagationTrace trace;
  CentralityScores centrality;
  DoiSceneGraph clauses;  // one group per process, as extracted
  DoiSceneGraph scene;    // aggregated
  std::vector<SentencePlan> plans;
  NarrativeDoc doc;
};

// Sentence plans in narrative order: each effect sentence followed by its
// major-effect sentence, then no-effect and max-effect; then trends with
// their spike and summary sentences; correlations last.
inline std::vector<SentencePlan> plan_narrative(const CausalGraph& g, const PropagationTrace& trace,
                                                const NarrativeRequest& req, const CentralityScores& centrality,
                                                const DoiSceneGraph& scene, WikiSummaryProvider* provider) {
  ModuleOptions opts = req.modules;
  opts.seed = req.seed;
  const auto focus = detail::focus_nodes(req.interventions, req.objectives);

  std::vector<SentencePlan> plans;
  for (const auto& group : effect_groups(g, req.interventions, req.objectives)) {
    plans.push_back(effect_plan(g, trace, req.interventions, group));
    if (auto major = major_effect_plan(g, trace, focus, group, opts.major_effect_count)) {
      plans.push_back(std::move(*major));
    }
  }
  for (auto& p : no_effect_sentences(g, trace, req.interventions, req.objectives)) plans.push_back(std::move(p));
  for (auto& p : max_effect_sentences(g, trace, req.interventions, req.objectives)) plans.push_back(std::move(p));

  const auto ts = time_series_sentences(g, trace, req.interventions, req.objectives, centrality, opts);
  const auto spikes = spike_sentences(g, trace, ts.important, opts.spike_theta);
  const auto wiki = wiki_sentences(g, ts.important, provider);
  for (auto& p : interleave_trends(ts, spikes, wiki)) plans.push_back(std::move(p));
  for (auto& p : correlation_sentences(g, scene, opts.max_correlations)) plans.push_back(std::move(p));

  for (std::size_t i = 0; i < plans.size(); ++i) {
    plans[i].order_hint = static_cast<int>(i);
    for (auto& [_, slot] : plans[i].slots) {
      for (auto& item : slot) {
        if (item.node && focus.count(*item.node)) item.emphasis = true;
      }
    }
  }
  return plans;
}

// propagate -> analytics -> clauses/scene graph -> modules -> render.
inline NarrativeResult generate_narrative(const CausalGraph& g, const NarrativeRequest& req,
                                          WikiSummaryProvider* provider = nullptr, const TemplateSet& templates = {}) {
  validate_objectives(g, req.objectives);
  NarrativeResult r;
  r.trace = propagate(g, req.interventions, req.horizon);
  r.centrality = pagerank(g);
  ExtractionOptions extraction;
  extraction.weights = req.weights;
  extraction.spike_theta = req.modules.spike_theta;
  auto clauses = extract_clauses(g, r.trace, req.interventions, req.objectives, r.centrality, extraction);
  r.clauses = build_scene_graph(std::move(clauses));
  r.scene = aggregate(r.clauses);
  r.plans = plan_narrative(g, r.trace, req, r.centrality, r.scene, provider);
  // Aggregated clauses sit under one process only, so plans are ranked by
  // the DOI each process had before merging.
  r.doc = render(r.plans, r.clauses, req.scope, req.budget, templates);
  return r;
}

// Node fill (polarity + shade 0..4, darker for larger |change|) and edge
// stroke (thickness 1..5 from |weight|) for the graph view.
inline ordered_json visual_encodings(const CausalGraph& g, const PropagationTrace& trace) {
  double max_change = 0.0;
  for (const auto& [_, s] : trace.series) max_change = std::max(max_change, std::abs(net_change(s)));
  ordered_json out;
  out["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes()) {
    const double d = net_change(trace.at(n.id));
    int shade = 0;
    if (d != 0.0 && max_change > 0) shade = std::clamp(static_cast<int>(std::ceil(4.0 * std::abs(d) / max_change)), 1, 4);
    out["nodes"].push_back({{"id", n.id},
                            {"net_change", d},
                            {"polarity", d > 0 ? "positive" : (d < 0 ? "negative" : "neutral")},
                            {"shade", shade}});
  }
  out["edges"] = ordered_json::array();
  for (const auto& e : g.edges()) {
    const int thickness = std::clamp(static_cast<int>(std::ceil(5.0 * std::abs(e.weight))), 1, 5);
    out["edges"].push_back({{"source", e.source},
                            {"target", e.target},
                            {"polarity", e.weight >= 0 ? "positive" : "negative"},
                            {"thickness", thickness}});
  }
  return out;
}

inline ordered_json trace_summary(const PropagationTrace& trace) {
  ordered_json out;
  out["horizon"] = trace.horizon;
  out["clamped"] = trace.clamped;
  out["net_changes"] = ordered_json::object();
  for (const auto& [id, s] : trace.series) out["net_changes"][id] = net_change(s);
  return out;
}

}  // namespace causeworks
