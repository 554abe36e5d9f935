#pragma once

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "causeworks/causal_model.hpp"
#include "causeworks/propagation.hpp"
#include "causeworks/renderer.hpp"

// Structured-document formats (JSON):
//
//   graph     {"nodes": [{"id", "label", "baseline"?}], "edges": [{"source", "target", "weight"}]}
//   scenario  {"interventions": [{"node", "delta", "start"?, "kind"?}], "objectives": [id...], "horizon"?}
//   trace     {"horizon", "clamped", "series": {id: [values...]}}
//   narrative {"blocks", "spans", "scope", "budget", "truncated"}
//
// Readers reject unknown fields.
namespace causeworks {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Validation failure of a parsed graph; carries the full report.
class GraphValidationError : public Error {
 public:
  explicit GraphValidationError(ValidationReport report)
      : Error(report.has(ViolationKind::cycle) ? ErrorKind::cycle : ErrorKind::invalid_graph, report.summary()),
        report_(std::move(report)) {}

  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

namespace detail {

inline void only_fields(const json& obj, const std::string& where, std::initializer_list<const char*> allowed,
                        std::initializer_list<const char*> required) {
  if (!obj.is_object()) throw Error(ErrorKind::parse, where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorKind::parse, where + ": unknown field '" + key + "'");
    }
  }
  for (const char* r : required) {
    if (!obj.contains(r)) throw Error(ErrorKind::parse, where + ": missing field '" + r + "'");
  }
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw Error(ErrorKind::parse, "");
    } else if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw Error(ErrorKind::parse, "");
    } else {
      if (!v.is_number()) throw Error(ErrorKind::parse, "");
    }
    return v.get<T>();
  } catch (const Error&) {
    throw Error(ErrorKind::parse, where + "/" + key + ": wrong type");
  }
}

inline json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, source + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// Parses without validating graph invariants.
inline CausalGraph graph_from_json_unchecked(const json& doc) {
  detail::only_fields(doc, "", {"nodes", "edges"}, {"nodes", "edges"});
  if (!doc["nodes"].is_array()) throw Error(ErrorKind::parse, "/nodes: expected an array");
  if (!doc["edges"].is_array()) throw Error(ErrorKind::parse, "/edges: expected an array");
  std::vector<ProcessNode> nodes;
  std::vector<CausalEdge> edges;
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const auto& n = doc["nodes"][i];
    const std::string where = "/nodes/" + std::to_string(i);
    detail::only_fields(n, where, {"id", "label", "baseline"}, {"id", "label"});
    ProcessNode node;
    node.id = detail::field<std::string>(n, "id", where);
    node.label = detail::field<std::string>(n, "label", where);
    if (n.contains("baseline")) node.baseline = detail::field<double>(n, "baseline", where);
    nodes.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
    const auto& e = doc["edges"][i];
    const std::string where = "/edges/" + std::to_string(i);
    detail::only_fields(e, where, {"source", "target", "weight"}, {"source", "target", "weight"});
    edges.push_back({detail::field<std::string>(e, "source", where), detail::field<std::string>(e, "target", where),
                     detail::field<double>(e, "weight", where)});
  }
  return CausalGraph(std::move(nodes), std::move(edges));
}

inline CausalGraph graph_from_json(const json& doc) {
  auto g = graph_from_json_unchecked(doc);
  auto report = validate_graph(g);
  if (!report.empty()) throw GraphValidationError(std::move(report));
  return g;
}

inline CausalGraph parse_graph(const std::string& text, const std::string& source = "graph") {
  return graph_from_json(detail::parse_text(text, source));
}

inline CausalGraph load_graph(const std::string& path) { return parse_graph(detail::read_file(path), path); }

inline ordered_json to_json(const CausalGraph& g) {
  ordered_json doc;
  doc["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes()) {
    ordered_json node{{"id", n.id}, {"label", n.label}};
    if (n.baseline != 0.0) node["baseline"] = n.baseline;
    doc["nodes"].push_back(std::move(node));
  }
  doc["edges"] = ordered_json::array();
  for (const auto& e : g.edges()) {
    doc["edges"].push_back({{"source", e.source}, {"target", e.target}, {"weight", e.weight}});
  }
  return doc;
}

inline const char* to_string(InterventionKind k) { return k == InterventionKind::point ? "point" : "sustained"; }

inline InterventionSpec intervention_from_json(const json& j, const std::string& where) {
  detail::only_fields(j, where, {"node", "delta", "start", "kind"}, {"node", "delta"});
  InterventionSpec iv;
  iv.node = detail::field<std::string>(j, "node", where);
  iv.delta = detail::field<double>(j, "delta", where);
  if (j.contains("start")) iv.start = detail::field<int>(j, "start", where);
  if (j.contains("kind")) {
    const auto kind = detail::field<std::string>(j, "kind", where);
    if (kind == "point") {
      iv.kind = InterventionKind::point;
    } else if (kind == "sustained") {
      iv.kind = InterventionKind::sustained;
    } else {
      throw Error(ErrorKind::parse, where + "/kind: expected 'point' or 'sustained'");
    }
  }
  return iv;
}

inline ordered_json to_json(const InterventionSpec& iv) {
  return {{"node", iv.node}, {"delta", iv.delta}, {"start", iv.start}, {"kind", to_string(iv.kind)}};
}

inline std::vector<InterventionSpec> interventions_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw Error(ErrorKind::parse, where + ": expected an array");
  std::vector<InterventionSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(intervention_from_json(arr[i], where + "/" + std::to_string(i)));
  return out;
}

inline ObjectiveSet objectives_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw Error(ErrorKind::parse, where + ": expected an array");
  ObjectiveSet out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) throw Error(ErrorKind::parse, where + "/" + std::to_string(i) + ": expected a node id");
    out.nodes.push_back(arr[i].get<std::string>());
  }
  return out;
}

struct Scenario {
  std::vector<InterventionSpec> interventions;
  ObjectiveSet objectives;
  std::optional<int> horizon;
};

inline Scenario scenario_from_json(const json& doc) {
  detail::only_fields(doc, "", {"interventions", "objectives", "horizon"}, {"interventions", "objectives"});
  Scenario s;
  s.interventions = interventions_from_json(doc["interventions"], "/interventions");
  s.objectives = objectives_from_json(doc["objectives"], "/objectives");
  if (doc.contains("horizon")) s.horizon = detail::field<int>(doc, "horizon", "");
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  return scenario_from_json(detail::parse_text(detail::read_file(path), path));
}

inline ordered_json to_json(const PropagationTrace& trace) {
  ordered_json doc;
  doc["horizon"] = trace.horizon;
  doc["clamped"] = trace.clamped;
  doc["series"] = ordered_json::object();
  for (const auto& [id, s] : trace.series) doc["series"][id] = s;
  return doc;
}

inline PropagationTrace trace_from_json(const json& doc) {
  detail::only_fields(doc, "", {"horizon", "clamped", "series"}, {"horizon", "series"});
  PropagationTrace t;
  t.horizon = detail::field<int>(doc, "horizon", "");
  if (doc.contains("clamped")) t.clamped = doc["clamped"].get<bool>();
  for (const auto& [id, values] : doc["series"].items()) t.series[id] = values.get<std::vector<double>>();
  return t;
}

inline ordered_json to_json(const Span& s) {
  ordered_json j;
  j["start"] = s.start;
  j["end"] = s.end;
  j["kind"] = to_string(s.kind);
  if (s.node) j["node"] = *s.node;
  if (s.value) j["value"] = *s.value;
  if (s.kind == SpanKind::polarity_color && s.value) j["polarity"] = *s.value > 0 ? "positive" : "negative";
  if (!s.values.empty()) j["values"] = s.values;
  return j;
}

inline ordered_json to_json(const NarrativeDoc& doc) {
  ordered_json j;
  j["blocks"] = ordered_json::array();
  for (const auto& b : doc.blocks) {
    j["blocks"].push_back({{"module", b.module}, {"text", b.text}, {"heading", b.heading}});
  }
  j["spans"] = ordered_json::array();
  for (const auto& s : doc.spans) j["spans"].push_back(to_json(s));
  j["scope"] = to_string(doc.scope);
  if (doc.budget) {
    j["budget"] = *doc.budget;
  } else {
    j["budget"] = nullptr;
  }
  j["truncated"] = doc.truncated;
  return j;
}

inline SpanKind parse_span_kind(const std::string& s) {
  for (auto k : {SpanKind::node_ref, SpanKind::emphasis, SpanKind::polarity_color, SpanKind::value, SpanKind::glyph,
                 SpanKind::list_item, SpanKind::sparkline}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::parse, "unknown span kind '" + s + "'");
}

// Reader for the wire format emitted by to_json(NarrativeDoc).
inline NarrativeDoc narrative_from_json(const json& doc) try {
  detail::only_fields(doc, "", {"blocks", "spans", "scope", "budget", "truncated"},
                      {"blocks", "spans", "scope", "budget", "truncated"});
  NarrativeDoc out;
  for (std::size_t i = 0; i < doc["blocks"].size(); ++i) {
    const auto& b = doc["blocks"][i];
    const std::string where = "/blocks/" + std::to_string(i);
    detail::only_fields(b, where, {"module", "text", "heading"}, {"module", "text", "heading"});
    out.blocks.push_back({detail::field<std::string>(b, "module", where), detail::field<std::string>(b, "text", where),
                          b["heading"].get<bool>()});
  }
  for (std::size_t i = 0; i < doc["spans"].size(); ++i) {
    const auto& s = doc["spans"][i];
    const std::string where = "/spans/" + std::to_string(i);
    detail::only_fields(s, where, {"start", "end", "kind", "node", "value", "polarity", "values"},
                        {"start", "end", "kind"});
    Span span;
    span.start = s["start"].get<std::size_t>();
    span.end = s["end"].get<std::size_t>();
    span.kind = parse_span_kind(detail::field<std::string>(s, "kind", where));
    if (s.contains("node")) span.node = detail::field<std::string>(s, "node", where);
    if (s.contains("value")) span.value = detail::field<double>(s, "value", where);
    if (s.contains("values")) span.values = s["values"].get<std::vector<double>>();
    out.spans.push_back(std::move(span));
  }
  out.scope = parse_scope(detail::field<std::string>(doc, "scope", ""));
  out.budget = doc["budget"].is_null() ? Budget{} : Budget{doc["budget"].get<std::size_t>()};
  out.truncated = doc["truncated"].get<bool>();
  return out;
} catch (const json::exception& e) {
  throw Error(ErrorKind::parse, std::string("narrative: ") + e.what());
}

}  // namespace causeworks
