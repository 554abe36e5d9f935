#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causeworks/pipeline.hpp"
#include "causeworks/propagation.hpp"
#include "causeworks/sentence_plan.hpp"
#include "causeworks/utf8.hpp"

namespace causeworks {

enum class NarrativeScope { cumulative, instantaneous };

inline const char* to_string(NarrativeScope s) {
  return s == NarrativeScope::cumulative ? "cumulative" : "instantaneous";
}

inline NarrativeScope parse_scope(const std::string& s) {
  if (s == "cumulative" || s == "cu") return NarrativeScope::cumulative;
  if (s == "instantaneous" || s == "is") return NarrativeScope::instantaneous;
  throw Error(ErrorKind::invalid_argument, "unknown scope '" + s + "'");
}

// Character budget; nullopt means unrestricted.
using Budget = std::optional<std::size_t>;
inline constexpr std::size_t kDefaultBudget = 1200;

enum class SpanKind { node_ref, emphasis, polarity_color, value, glyph, list_item, sparkline };

inline const char* to_string(SpanKind k) {
  switch (k) {
    case SpanKind::node_ref: return "node-ref";
    case SpanKind::emphasis: return "emphasis";
    case SpanKind::polarity_color: return "polarity-color";
    case SpanKind::value: return "value";
    case SpanKind::glyph: return "glyph";
    case SpanKind::list_item: return "list-item";
    case SpanKind::sparkline: return "sparkline";
  }
  return "?";
}

// Half-open [start, end) range in code points of NarrativeDoc::text().
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  SpanKind kind = SpanKind::node_ref;
  std::optional<NodeId> node;
  std::optional<double> value;        // unrounded, for value / polarity spans
  std::vector<double> values;         // sparkline samples

  friend bool operator==(const Span&, const Span&) = default;
};

struct Block {
  std::string module;  // module tag, or the section name for headings
  std::string text;
  bool heading = false;

  friend bool operator==(const Block&, const Block&) = default;
};

struct NarrativeDoc {
  std::vector<Block> blocks;
  std::vector<Span> spans;
  NarrativeScope scope = NarrativeScope::cumulative;
  Budget budget = kDefaultBudget;
  bool truncated = false;

  // Blocks joined by newlines; span offsets refer to this string.
  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i) out += '\n';
      out += blocks[i].text;
    }
    return out;
  }

  std::size_t char_count() const { return utf8::length(text()); }

  // Body text without headings, as printed by the command-line tool.
  std::string plain_text() const {
    std::string out;
    for (const auto& b : blocks) {
      if (!out.empty()) out += b.heading ? "\n\n" : "\n";
      out += b.text;
    }
    return out;
  }

  friend bool operator==(const NarrativeDoc&, const NarrativeDoc&) = default;
};

// Text plus spans relative to the start of the text.
struct Fragment {
  std::string text;
  std::vector<Span> spans;

  std::size_t length() const { return utf8::length(text); }

  void append(const std::string& s) { text += s; }

  void append(const Fragment& other) {
    const std::size_t offset = length();
    for (auto s : other.spans) {
      s.start += offset;
      s.end += offset;
      spans.push_back(std::move(s));
    }
    text += other.text;
  }
};

namespace detail {

inline constexpr const char* kUpGlyph = "↑";
inline constexpr const char* kDownGlyph = "↓";

// "+21% ↑" with value, polarity and glyph spans. Whole percentage points.
inline Fragment signed_value(double v, bool with_sign = true) {
  Fragment f;
  const long rounded = std::lround(v);
  std::string number;
  if (rounded == 0 && v != 0.0) {
    number = "<1%";
  } else if (with_sign) {
    number = (rounded > 0 ? "+" : (rounded < 0 ? "-" : "")) + std::to_string(std::abs(rounded)) + "%";
  } else {
    number = std::to_string(std::abs(rounded)) + "%";
  }
  const std::size_t len = utf8::length(number);
  f.text = number;
  f.spans.push_back({0, len, SpanKind::value, std::nullopt, v, {}});
  if (v != 0.0) {
    f.spans.push_back({0, len, SpanKind::polarity_color, std::nullopt, v, {}});
    f.text += " ";
    f.text += v > 0 ? kUpGlyph : kDownGlyph;
    f.spans.push_back({len + 1, len + 2, SpanKind::glyph, std::nullopt, v, {}});
  }
  return f;
}

}  // namespace detail

// Phrase for one node's trajectory: its net change (cumulative) or the
// sequence of non-zero hops (instantaneous).
inline Fragment scope_fragment(std::span<const double> series, NarrativeScope scope) {
  Fragment f;
  if (is_all_zero(series)) {
    f.append("remained unchanged");
    return f;
  }
  if (scope == NarrativeScope::cumulative) {
    const double net = net_change(series);
    if (net == 0.0) {
      f.append("showed no net change");
      return f;
    }
    f.append(net > 0 ? "increased by " : "decreased by ");
    f.append(detail::signed_value(net, false));
    return f;
  }
  const auto hops = hop_changes(series);
  std::size_t last = 0;
  bool first = true;
  for (std::size_t t = 0; t < hops.size(); ++t) {
    if (hops[t] == 0.0) continue;
    if (!first) f.append(", then ");
    first = false;
    f.append(hops[t] > 0 ? "rose " : "fell ");
    f.append(detail::signed_value(hops[t], false));
    f.append(" at T" + std::to_string(t + 1));
    last = t;
  }
  if (last + 1 < hops.size()) f.append(", then held");
  return f;
}

inline std::string render_scope(const PropagationTrace& trace, const NodeId& node, NarrativeScope scope) {
  return scope_fragment(trace.at(node), scope).text;
}

namespace detail {

inline Fragment realize_item(const SlotItem& item, NarrativeScope scope) {
  Fragment f;
  if (!item.text.empty()) {
    const std::size_t len = utf8::length(item.text);
    f.text = item.text;
    if (item.node) {
      f.spans.push_back({0, len, SpanKind::node_ref, item.node, std::nullopt, {}});
      if (item.emphasis) f.spans.push_back({0, len, SpanKind::emphasis, item.node, std::nullopt, {}});
      if (item.sparkline) f.spans.push_back({0, len, SpanKind::sparkline, item.node, std::nullopt, *item.sparkline});
    }
  }
  if (item.value) {
    if (!f.text.empty()) f.append(" (");
    f.append(signed_value(*item.value, item.show_sign));
    if (!item.text.empty()) f.append(")");
  }
  if (item.trajectory) {
    f.append(" (");
    f.append(scope_fragment(*item.trajectory, scope));
    f.append(")");
  }
  return f;
}

// "A", "A and B", "A, B and C"; each entry of a multi-item slot is a list item.
inline Fragment realize_slot(const Slot& slot, NarrativeScope scope) {
  Fragment f;
  for (std::size_t i = 0; i < slot.size(); ++i) {
    if (i > 0) f.append(i + 1 == slot.size() ? " and " : ", ");
    auto item = realize_item(slot[i], scope);
    if (slot.size() > 1) {
      const auto start = f.length();
      f.append(item);
      f.spans.push_back({start, f.length(), SpanKind::list_item, slot[i].node, std::nullopt, {}});
    } else {
      f.append(item);
    }
  }
  return f;
}

}  // namespace detail

// Fills the plan's template. Every {slot} must have at least one item.
inline Fragment realize(const SentencePlan& plan, NarrativeScope scope, const TemplateSet& templates = {}) {
  const std::string& tpl = templates.get(plan.template_id);
  Fragment f;
  std::size_t i = 0;
  while (i < tpl.size()) {
    const auto open = tpl.find('{', i);
    if (open == std::string::npos) {
      f.append(tpl.substr(i));
      break;
    }
    const auto close = tpl.find('}', open);
    if (close == std::string::npos) throw Error(ErrorKind::parse, "unterminated slot in template " + plan.template_id);
    f.append(tpl.substr(i, open - i));
    const auto name = tpl.substr(open + 1, close - open - 1);
    auto it = plan.slots.find(name);
    if (it == plan.slots.end() || it->second.empty()) {
      throw Error(ErrorKind::invalid_argument, "template " + plan.template_id + " slot {" + name + "} is not filled");
    }
    f.append(detail::realize_slot(it->second, scope));
    i = close + 1;
  }
  // Sentence-initial capital for templates that start with a slot.
  if (!f.text.empty() && std::islower(static_cast<unsigned char>(f.text[0]))) {
    f.text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(f.text[0])));
  }
  return f;
}

inline constexpr const char* kImpactHeading = "Impact Summary";
inline constexpr const char* kTrendsHeading = "Projected Trends";
// Stands in for the narrative when not even the top plan fits a non-zero budget.
inline constexpr const char* kTruncatedNotice = "(narrative truncated)";

// DOI of a plan: the highest group DOI among the processes it mentions.
// Correlation sentences always rank last.
inline double plan_doi(const SentencePlan& plan, const DoiSceneGraph& scene) {
  if (plan.module == ModuleKind::correlation) return -1.0;
  double best = 0.0;
  for (const auto& id : plan.nodes()) {
    if (auto d = scene.doi_of(id)) best = std::max(best, *d);
  }
  return best;
}

// Greedy budgeted rendering. Plans are taken in descending DOI order (plan
// order on ties) while they fit; the first plan that does not fit ends the
// walk, so every lower-DOI branch is pruned and a larger budget always
// yields a superset. Selected plans are laid out in plan order under their
// section headings.
inline NarrativeDoc render(std::span<const SentencePlan> plans, const DoiSceneGraph& scene, NarrativeScope scope,
                           Budget budget = kDefaultBudget, const TemplateSet& templates = {}) {
  NarrativeDoc doc;
  doc.scope = scope;
  doc.budget = budget;

  std::vector<Fragment> realized;
  std::vector<double> doi;
  realized.reserve(plans.size());
  for (const auto& p : plans) {
    realized.push_back(realize(p, scope, templates));
    doi.push_back(plan_doi(p, scene));
  }

  std::vector<std::size_t> order(plans.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return doi[a] > doi[b]; });

  const std::size_t limit = budget.value_or(std::numeric_limits<std::size_t>::max());
  const std::size_t impact_cost = utf8::length(kImpactHeading);
  const std::size_t trends_cost = utf8::length(kTrendsHeading);
  std::vector<bool> chosen(plans.size(), false);
  bool has_impact = false, has_trends = false;
  std::size_t used = 0, blocks = 0;
  for (std::size_t i : order) {
    const bool impact = is_impact_summary(plans[i].module);
    std::size_t cost = realized[i].length() + (blocks > 0 ? 1 : 0);
    std::size_t extra_blocks = 1;
    if (impact ? !has_impact : !has_trends) {
      cost += (impact ? impact_cost : trends_cost) + 1;
      ++extra_blocks;
    }
    if (used + cost > limit) break;
    used += cost;
    blocks += extra_blocks;
    chosen[i] = true;
    (impact ? has_impact : has_trends) = true;
  }
  doc.truncated = std::count(chosen.begin(), chosen.end(), true) != static_cast<std::ptrdiff_t>(plans.size());

  std::size_t offset = 0;
  auto push_block = [&](Block block, const std::vector<Span>& spans) {
    if (!doc.blocks.empty()) ++offset;  // newline separator
    for (auto s : spans) {
      s.start += offset;
      s.end += offset;
      doc.spans.push_back(std::move(s));
    }
    offset += utf8::length(block.text);
    doc.blocks.push_back(std::move(block));
  };
  bool impact_open = false, trends_open = false;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (!chosen[i]) continue;
    const bool impact = is_impact_summary(plans[i].module);
    bool& open = impact ? impact_open : trends_open;
    if (!open) {
      const char* title = impact ? kImpactHeading : kTrendsHeading;
      push_block({title, title, true}, {});
      open = true;
    }
    push_block({to_string(plans[i].module), realized[i].text, false}, realized[i].spans);
  }
  if (doc.blocks.empty() && !plans.empty() && limit > 0) {
    const std::string notice = utf8::length(kTruncatedNotice) <= limit ? kTruncatedNotice : "…";
    push_block({"notice", notice, false}, {});
  }
  return doc;
}

using InteractionIndex = std::map<NodeId, std::vector<std::pair<std::size_t, std::size_t>>>;

// Node id -> every range where the node is mentioned, for brushing and
// hyperlinking.
inline InteractionIndex interaction_index(const NarrativeDoc& doc) {
  InteractionIndex index;
  for (const auto& s : doc.spans) {
    if (s.kind == SpanKind::node_ref && s.node) index[*s.node].emplace_back(s.start, s.end);
  }
  return index;
}

struct SearchHit {
  std::size_t start = 0;
  std::size_t end = 0;
  std::optional<NodeId> node;  // node-ref span enclosing the hit, if any

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

// Case-insensitive substring search over the narrative text.
inline std::vector<SearchHit> search(const NarrativeDoc& doc, const std::string& query) {
  std::vector<SearchHit> hits;
  if (query.empty()) return hits;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  const std::string text = lower(doc.text());
  const std::string q = lower(query);
  const std::size_t qlen = utf8::length(q);
  for (auto pos = text.find(q); pos != std::string::npos; pos = text.find(q, pos + 1)) {
    SearchHit hit;
    hit.start = utf8::length(std::string_view(text).substr(0, pos));
    hit.end = hit.start + qlen;
    for (const auto& s : doc.spans) {
      if (s.kind == SpanKind::node_ref && s.start <= hit.start && hit.end <= s.end) {
        hit.node = s.node;
        break;
      }
    }
    hits.push_back(std::move(hit));
  }
  return hits;
}

}  // namespace causeworks
