#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causeworks/causal_model.hpp"

namespace causeworks {

enum class ModuleKind { effect, major_effect, no_effect, max_effect, time_series, spike, wiki, correlation };

inline const char* to_string(ModuleKind m) {
  switch (m) {
    case ModuleKind::effect: return "effect";
    case ModuleKind::major_effect: return "major-effect";
    case ModuleKind::no_effect: return "no-effect";
    case ModuleKind::max_effect: return "max-effect";
    case ModuleKind::time_series: return "time-series";
    case ModuleKind::spike: return "spike";
    case ModuleKind::wiki: return "wiki";
    case ModuleKind::correlation: return "correlation";
  }
  return "?";
}

// Impact summary modules come first in a narrative, projected trends after.
inline bool is_impact_summary(ModuleKind m) {
  return m == ModuleKind::effect || m == ModuleKind::major_effect || m == ModuleKind::no_effect ||
         m == ModuleKind::max_effect;
}

// One entry of a template slot. A node item is realised as its label; a value
// is appended as "(+21% ↑)", or stands alone when text is empty; a trajectory
// is phrased according to the narrative scope.
struct SlotItem {
  std::string text;
  std::optional<NodeId> node;
  std::optional<double> value;
  std::optional<std::vector<double>> trajectory;
  std::optional<std::vector<double>> sparkline;
  bool emphasis = false;
  bool show_sign = true;  // "+21%" rather than "21%"; polarity and glyph are kept either way
};

using Slot = std::vector<SlotItem>;

struct SentencePlan {
  ModuleKind module = ModuleKind::effect;
  std::string template_id;
  std::map<std::string, Slot> slots;
  int order_hint = 0;

  // Node ids mentioned in any slot, first-appearance order.
  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    for (const auto& [_, slot] : slots) {
      for (const auto& item : slot) {
        if (item.node && std::find(out.begin(), out.end(), *item.node) == out.end()) out.push_back(*item.node);
      }
    }
    return out;
  }
};

inline SlotItem text_item(std::string text) {
  SlotItem item;
  item.text = std::move(text);
  return item;
}

// Realisation templates keyed by template id; placeholders are written
// {slot}. Ships as data/templates.json; these are the built-in defaults.
class TemplateSet {
 public:
  TemplateSet() : templates_(defaults()) {}

  static std::map<std::string, std::string> defaults() {
    return {
        {"effect", "Changing {interventions} affects {objectives}."},
        {"major-effect", "The change is carried mainly by {nodes}."},
        {"no-effect.unaffected", "{objectives} showed no change under the combined interventions."},
        {"no-effect.disconnected", "{interventions} had no causal path to {objectives}."},
        {"max-effect.positive", "Across the whole network, the most positively impacted node is {node}."},
        {"max-effect.negative", "Across the whole network, the most negatively impacted node is {node}."},
        {"time-series", "{nodes} {verb} a {shape} pattern over the {horizon} time steps."},
        {"spike", "{node} shows a sudden {direction} of {magnitude} at T{step}."},
        {"wiki", "{node}: {summary}"},
        {"correlation", "{subjects} moved in step with {objects}, although no causal path links them."},
    };
  }

  // Overrides from a JSON object {template id: text}. Unknown ids are rejected.
  static TemplateSet from_json(const nlohmann::json& doc) {
    TemplateSet set;
    if (!doc.is_object()) throw Error(ErrorKind::parse, "template document must be an object");
    for (const auto& [id, text] : doc.items()) {
      if (!set.templates_.count(id)) throw Error(ErrorKind::parse, "unknown template id '" + id + "'");
      if (!text.is_string()) throw Error(ErrorKind::parse, "template '" + id + "' must be a string");
      set.templates_[id] = text.get<std::string>();
    }
    return set;
  }

  static TemplateSet load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open template file " + path);
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path + ": " + e.what());
    }
  }

  const std::string& get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw Error(ErrorKind::not_found, "no template '" + id + "'");
    return it->second;
  }

  const std::map<std::string, std::string>& all() const { return templates_; }

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace causeworks
