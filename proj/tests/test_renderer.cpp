#include <gtest/gtest.h>

#include <random>

#include "causeworks/io.hpp"
#include "causeworks/narrative.hpp"
#include "oracles.hpp"

using namespace causeworks;

namespace {

const std::string kSource = CAUSEWORKS_SOURCE_DIR;

struct Climate {
  CausalGraph graph = load_graph(kSource + "/fixtures/climate/graph.json");
  Scenario scenario = load_scenario(kSource + "/fixtures/climate/scenario.json");
  OfflineWikiCache wiki{kSource + "/fixtures/climate/wiki_cache.json"};

  NarrativeResult run(Budget budget, NarrativeScope scope = NarrativeScope::cumulative) {
    NarrativeRequest req;
    req.interventions = scenario.interventions;
    req.objectives = scenario.objectives;
    req.budget = budget;
    req.scope = scope;
    return generate_narrative(graph, req, &wiki);
  }
};

// Code-point substring, computed independently of the library helpers.
std::string cp_substr(const std::string& s, std::size_t start, std::size_t len) {
  std::vector<std::string> cps;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    const std::size_t n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    cps.push_back(s.substr(i, n));
    i += n;
  }
  std::string out;
  for (std::size_t i = start; i < start + len && i < cps.size(); ++i) out += cps[i];
  return out;
}

SentencePlan text_plan(const std::string& text, const NodeId& node) {
  SentencePlan p;
  p.module = ModuleKind::wiki;
  p.template_id = "wiki";
  SlotItem about;
  about.node = node;
  p.slots["node"] = {about};
  p.slots["summary"] = {text_item(text)};
  return p;
}

DoiSceneGraph scene_with(std::map<NodeId, double> doi) {
  DoiSceneGraph s;
  for (const auto& [id, d] : doi) {
    Clause c;
    c.primary = id;
    c.subjects = {id};
    c.doi = d;
    s.groups.push_back({id, {c}});
  }
  return s;
}

void expect_span_integrity(const NarrativeDoc& doc, const CausalGraph& g) {
  const auto text = doc.text();
  const auto len = doc.char_count();
  for (const auto& s : doc.spans) {
    ASSERT_LE(s.start, s.end);
    ASSERT_LE(s.end, len);
    if (s.kind == SpanKind::node_ref) {
      ASSERT_TRUE(s.node);
      ASSERT_TRUE(g.contains(*s.node));
      EXPECT_EQ(cp_substr(text, s.start, s.end - s.start), g.label(*s.node));
    }
    if (s.kind == SpanKind::glyph) {
      const auto glyph = cp_substr(text, s.start, 1);
      EXPECT_TRUE(glyph == "↑" || glyph == "↓") << glyph;
    }
  }
  for (const auto& a : doc.spans) {
    for (const auto& b : doc.spans) {
      const bool disjoint = a.end <= b.start || b.end <= a.start;
      const bool nested = (a.start <= b.start && b.end <= a.end) || (b.start <= a.start && a.end <= b.end);
      EXPECT_TRUE(disjoint || nested);
    }
  }
}

}  // namespace

TEST(Render, UnlimitedBudgetRendersEverything) {
  Climate c;
  const auto r = c.run(std::nullopt);
  EXPECT_FALSE(r.doc.truncated);
  std::size_t bodies = 0;
  for (const auto& b : r.doc.blocks) bodies += !b.heading;
  EXPECT_EQ(bodies, r.plans.size());
  EXPECT_EQ(r.doc.blocks.front().text, kImpactHeading);
}

TEST(Render, ZeroBudgetIsEmptyAndTruncated) {
  Climate c;
  const auto r = c.run(std::size_t{0});
  EXPECT_TRUE(r.doc.truncated);
  EXPECT_EQ(r.doc.text(), "");
  EXPECT_TRUE(r.doc.spans.empty());
}

TEST(Render, GreedyTakesHigherDoiPlan) {
  const std::string low(100, 'L'), high(100, 'H');
  const std::vector<SentencePlan> plans{text_plan(low, "x"), text_plan(high, "y")};
  TemplateSet tpl = TemplateSet::from_json({{"wiki", "{summary}"}});
  const auto doc = render(plans, scene_with({{"x", 0.2}, {"y", 0.9}}), NarrativeScope::cumulative, 150, tpl);
  ASSERT_EQ(doc.blocks.size(), 2u);
  EXPECT_EQ(doc.blocks[1].text, high);
  EXPECT_TRUE(doc.truncated);
  const auto both = render(plans, scene_with({{"x", 0.2}, {"y", 0.9}}), NarrativeScope::cumulative, 300, tpl);
  ASSERT_EQ(both.blocks.size(), 3u);
  EXPECT_EQ(both.blocks[1].text, low);  // laid out in plan order
  EXPECT_FALSE(both.truncated);
}

TEST(Render, TopPlanTooLongGivesNotice) {
  const std::vector<SentencePlan> plans{text_plan(std::string(100, 'a'), "x")};
  TemplateSet tpl = TemplateSet::from_json({{"wiki", "{summary}"}});
  const auto doc = render(plans, {}, NarrativeScope::cumulative, 50, tpl);
  EXPECT_TRUE(doc.truncated);
  EXPECT_EQ(doc.text(), kTruncatedNotice);
  EXPECT_EQ(render(plans, {}, NarrativeScope::cumulative, 5, tpl).text(), "…");
  EXPECT_EQ(render(std::vector<SentencePlan>{}, {}, NarrativeScope::cumulative, 50, tpl).text(), "");
}

TEST(Render, CharCountWithinBudgetAndMonotone) {
  Climate c;
  const std::vector<Budget> budgets{std::size_t{0}, std::size_t{200}, std::size_t{600}, std::size_t{1200},
                                    std::nullopt};
  std::vector<std::vector<std::string>> bodies;
  for (const auto& b : budgets) {
    const auto r = c.run(b);
    if (b) {
      EXPECT_LE(r.doc.char_count(), *b);
    }
    std::vector<std::string> texts;
    for (const auto& blk : r.doc.blocks) {
      if (!blk.heading && blk.module != "notice") texts.push_back(blk.text);
    }
    bodies.push_back(texts);
  }
  for (std::size_t i = 1; i < bodies.size(); ++i) {
    EXPECT_GE(bodies[i].size(), bodies[i - 1].size());
    for (const auto& t : bodies[i - 1]) {
      EXPECT_NE(std::find(bodies[i].begin(), bodies[i].end(), t), bodies[i].end()) << t;
    }
  }
}

TEST(RenderProperty, MonotoneOnRandomGraphs) {
  std::mt19937_64 rng(515);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = oracle::random_dag(rng, 5 + trial % 8, 0.35);
    NarrativeRequest req;
    req.interventions = oracle::random_interventions(rng, g, 1 + trial % 3, 12);
    req.objectives.nodes = {g.nodes().back().id};
    std::size_t prev_blocks = 0;
    std::vector<std::string> prev;
    for (std::size_t budget = 0; budget <= 1600; budget += 100) {
      req.budget = budget;
      const auto doc = generate_narrative(g, req).doc;
      EXPECT_LE(doc.char_count(), budget);
      std::vector<std::string> texts;
      for (const auto& b : doc.blocks) {
        if (!b.heading && b.module != "notice") texts.push_back(b.text);
      }
      for (const auto& t : prev) EXPECT_NE(std::find(texts.begin(), texts.end(), t), texts.end());
      EXPECT_GE(texts.size(), prev_blocks);
      prev_blocks = texts.size();
      prev = texts;
    }
  }
}

TEST(Render, SpanIntegrityOnClimate) {
  Climate c;
  for (auto scope : {NarrativeScope::cumulative, NarrativeScope::instantaneous}) {
    for (Budget b : {Budget{}, Budget{600}, Budget{1200}}) expect_span_integrity(c.run(b, scope).doc, c.graph);
  }
}

TEST(Render, SignedValuesCarryPolarityAndGlyph) {
  Climate c;
  const auto doc = c.run(std::nullopt).doc;
  const auto text = doc.text();
  std::size_t values = 0, polar = 0, glyphs = 0, emphasis = 0;
  for (const auto& s : doc.spans) {
    values += s.kind == SpanKind::value && s.value && *s.value != 0;
    polar += s.kind == SpanKind::polarity_color;
    glyphs += s.kind == SpanKind::glyph;
    emphasis += s.kind == SpanKind::emphasis;
  }
  EXPECT_GT(values, 0u);
  EXPECT_EQ(values, polar);
  EXPECT_EQ(values, glyphs);
  EXPECT_GT(emphasis, 0u);
  EXPECT_NE(text.find("Fossil Fuel Consumption (-31% ↓)"), std::string::npos);
  EXPECT_NE(text.find("Land Degradation (+21% ↑)"), std::string::npos);
}

TEST(Render, ReRenderIsByteIdentical) {
  Climate c;
  const auto a = c.run(1200);
  const auto b = c.run(1200);
  EXPECT_EQ(a.doc, b.doc);
  EXPECT_EQ(to_json(a.doc).dump(), to_json(b.doc).dump());
  const auto again = render(a.plans, a.clauses, NarrativeScope::cumulative, 1200);
  EXPECT_EQ(to_json(again).dump(), to_json(a.doc).dump());
}

TEST(RenderScope, Fragments) {
  PropagationTrace t;
  t.horizon = 3;
  t.series = {{"A", {0, 20, 20, 20}}, {"Z", {0, 0, 0, 0}}, {"P", {0, 10, -5, -5}}};
  EXPECT_EQ(render_scope(t, "A", NarrativeScope::cumulative), "increased by 20% ↑");
  EXPECT_EQ(render_scope(t, "A", NarrativeScope::instantaneous), "rose 20% ↑ at T1, then held");
  EXPECT_EQ(render_scope(t, "Z", NarrativeScope::cumulative), "remained unchanged");
  EXPECT_EQ(render_scope(t, "Z", NarrativeScope::instantaneous), "remained unchanged");
  EXPECT_EQ(render_scope(t, "P", NarrativeScope::cumulative), "decreased by 5% ↓");
  EXPECT_EQ(render_scope(t, "P", NarrativeScope::instantaneous), "rose 10% ↑ at T1, then fell 15% ↓ at T2, then held");
  EXPECT_THROW(render_scope(t, "nope", NarrativeScope::cumulative), Error);
}

TEST(RenderScopeProperty, HopsSumToNetChange) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_dag(rng, 6, 0.4);
    const auto iv = oracle::random_interventions(rng, g, 2, 12);
    const auto t = propagate(g, iv);
    for (const auto& [id, s] : t.series) {
      const auto hops = hop_changes(s);
      EXPECT_NEAR(std::accumulate(hops.begin(), hops.end(), 0.0), net_change(s), 1e-9);
      std::size_t mentioned = 0;
      const auto text = render_scope(t, id, NarrativeScope::instantaneous);
      for (auto pos = text.find(" at T"); pos != std::string::npos; pos = text.find(" at T", pos + 1)) ++mentioned;
      EXPECT_EQ(mentioned, static_cast<std::size_t>(std::count_if(hops.begin(), hops.end(),
                                                                  [](double h) { return h != 0.0; })));
    }
  }
}

TEST(Render, SmallValuesReadAsUnderOnePercent) {
  SentencePlan p;
  p.module = ModuleKind::max_effect;
  p.template_id = "max-effect.positive";
  SlotItem item;
  item.text = "Node";
  item.node = "n";
  item.value = 0.3;
  p.slots["node"] = {item};
  EXPECT_EQ(realize(p, NarrativeScope::cumulative).text,
            "Across the whole network, the most positively impacted node is Node (<1% ↑).");
}

TEST(InteractionIndex, CountsMentions) {
  NarrativeDoc empty;
  EXPECT_TRUE(interaction_index(empty).empty());
  NarrativeDoc doc;
  doc.blocks = {{"wiki", "A and A", false}};
  doc.spans = {{0, 1, SpanKind::node_ref, "A", {}, {}}, {6, 7, SpanKind::node_ref, "A", {}, {}},
               {6, 7, SpanKind::emphasis, "A", {}, {}}};
  const auto idx = interaction_index(doc);
  ASSERT_EQ(idx.at("A").size(), 2u);
  EXPECT_EQ(idx.at("A")[1], (std::pair<std::size_t, std::size_t>{6, 7}));
}

TEST(Search, CaseInsensitiveAndMatchesScanOracle) {
  Climate c;
  const auto doc = c.run(std::nullopt).doc;
  const auto hits = search(doc, "Marine");
  ASSERT_FALSE(hits.empty());
  // Independent scan: lower-case the text code point by code point.
  const auto text = doc.text();
  std::vector<std::size_t> expected;
  const std::size_t n = doc.char_count();
  for (std::size_t i = 0; i + 6 <= n; ++i) {
    std::string window = cp_substr(text, i, 6);
    for (auto& ch : window) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (window == "marine") expected.push_back(i);
  }
  ASSERT_EQ(hits.size(), expected.size());
  std::size_t in_label = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    EXPECT_EQ(hits[i].start, expected[i]);
    EXPECT_EQ(hits[i].end, expected[i] + 6);
    if (hits[i].node == NodeId{"marine"}) ++in_label;
  }
  EXPECT_GE(in_label, 2u);
  EXPECT_EQ(search(doc, "mArInE").size(), hits.size());
  EXPECT_TRUE(search(doc, "").empty());
  EXPECT_TRUE(search(doc, "zzzzqq").empty());
}

TEST(Templates, ShippedFileMatchesDefaults) {
  const auto shipped = TemplateSet::load(kSource + "/data/templates.json");
  EXPECT_EQ(shipped.all(), TemplateSet::defaults());
  EXPECT_THROW(TemplateSet::from_json({{"no-such-template", "x"}}), Error);
  EXPECT_THROW(TemplateSet::from_json({{"wiki", 3}}), Error);
  EXPECT_THROW(TemplateSet::from_json(nlohmann::json::array()), Error);
}

TEST(Templates, OverrideChangesRealisation) {
  const auto tpl = TemplateSet::from_json({{"effect", "{interventions} => {objectives}"}});
  Climate c;
  NarrativeRequest req;
  req.interventions = c.scenario.interventions;
  req.objectives = c.scenario.objectives;
  req.budget = std::nullopt;
  const auto doc = generate_narrative(c.graph, req, nullptr, tpl).doc;
  EXPECT_NE(doc.text().find(" => "), std::string::npos);
  expect_span_integrity(doc, c.graph);
}

TEST(Templates, UnfilledSlotThrows) {
  SentencePlan p;
  p.template_id = "effect";
  p.slots["interventions"] = {text_item("x")};
  EXPECT_THROW(realize(p, NarrativeScope::cumulative), Error);
}
