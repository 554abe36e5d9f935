#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "causeworks/http_server.hpp"
#include "causeworks/io.hpp"
#include "causeworks/narrative.hpp"
#include "causeworks/service.hpp"
#include "causeworks/wiki.hpp"
#include "causeworks/wiki_http.hpp"

namespace cw = causeworks;

namespace {

cw::Budget parse_budget(const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "unlimited") return std::nullopt;
  std::size_t used = 0;
  long long v = -1;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
  }
  if (v < 0 || used != s.size()) throw cw::Error(cw::ErrorKind::invalid_argument, "--budget must be a non-negative integer or 'inf'");
  return static_cast<std::size_t>(v);
}

struct NarrateArgs {
  std::string graph;
  std::string scenario;
  std::string scope = "cumulative";
  std::string budget = std::to_string(cw::kDefaultBudget);
  std::optional<int> horizon;
  std::uint64_t seed = cw::kDefaultSeed;
  bool offline = false;
  bool live = false;
  bool json = false;
  std::string wiki_cache;
  std::string templates;
};

int narrate(const NarrateArgs& a) {
  const auto graph = cw::load_graph(a.graph);
  const auto scenario = cw::load_scenario(a.scenario);

  cw::NarrativeRequest req;
  req.interventions = scenario.interventions;
  req.objectives = scenario.objectives;
  req.horizon = a.horizon.value_or(scenario.horizon.value_or(cw::kDefaultHorizon));
  req.scope = cw::parse_scope(a.scope);
  req.budget = parse_budget(a.budget);
  req.seed = a.seed;
  if (req.horizon < 1) throw cw::Error(cw::ErrorKind::invalid_argument, "--horizon must be at least 1");
  if (req.interventions.empty() || req.objectives.nodes.empty()) {
    throw cw::Error(cw::ErrorKind::conflict, "select interventions and objectives");
  }
  cw::validate_interventions(graph, req.interventions, req.horizon);

  bool live = a.live;
  if (!live) {
    if (auto mode = cw::process_env("WIKI_MODE")) live = cw::parse_wiki_mode(*mode) == cw::WikiMode::live;
  }
  if (a.offline) live = false;

  // Without --wiki-cache, a wiki_cache.json next to the graph is used.
  std::string cache_path = a.wiki_cache;
  if (cache_path.empty()) {
    const auto sibling = std::filesystem::path(a.graph).parent_path() / "wiki_cache.json";
    if (std::filesystem::exists(sibling)) cache_path = sibling.string();
  }
  std::shared_ptr<cw::WikiSummaryProvider> provider;
  if (!cache_path.empty() || live) {
    auto cache = cache_path.empty() ? std::make_shared<cw::OfflineWikiCache>()
                                    : std::make_shared<cw::OfflineWikiCache>(cache_path);
    provider = cache;
    if (live) provider = std::make_shared<cw::LiveWikiProvider>(cache, cw::https_summary_fetcher());
  }
  const auto templates = a.templates.empty() ? cw::TemplateSet{} : cw::TemplateSet::load(a.templates);

  const auto result = cw::generate_narrative(graph, req, provider.get(), templates);
  if (a.json) {
    std::cout << cw::dump(cw::to_json(result.doc));
  } else {
    const auto text = result.doc.plain_text();
    std::cout << text;
    if (!text.empty()) std::cout << '\n';
  }
  if (result.doc.truncated) {
    std::cerr << "note: narrative truncated to fit the character budget of " << a.budget << '\n';
  }
  return 0;
}

int validate(const std::string& path) {
  const auto doc = cw::detail::parse_text(cw::detail::read_file(path), path);
  const auto graph = cw::graph_from_json_unchecked(doc);
  const auto report = cw::validate_graph(graph);
  if (report.empty()) {
    std::cout << "ok: " << graph.size() << " nodes, " << graph.edges().size() << " edges\n";
    return 0;
  }
  for (const auto& v : report.violations) std::cout << v.message << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("causeworks"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Causal-exploration engine and narrative generator"};
  app.require_subcommand(1);

  NarrateArgs na;
  auto* narrate_cmd = app.add_subcommand("narrate", "Print the narrative for a graph and a scenario");
  narrate_cmd->add_option("graph", na.graph, "Graph document (JSON)")->required();
  narrate_cmd->add_option("scenario", na.scenario, "Interventions and objectives (JSON)")->required();
  narrate_cmd->add_option("--scope", na.scope, "cumulative or instantaneous")->check(
      CLI::IsMember({"cumulative", "instantaneous", "cu", "is"}));
  narrate_cmd->add_option("--budget", na.budget, "Character budget, or 'inf'");
  narrate_cmd->add_option("--horizon", na.horizon, "Number of time steps");
  narrate_cmd->add_option("--seed", na.seed, "Clustering seed");
  narrate_cmd->add_flag("--offline", na.offline, "Never fetch summaries over the network");
  narrate_cmd->add_flag("--live", na.live, "Fetch missing summaries over the network");
  narrate_cmd->add_flag("--json", na.json, "Emit the full narrative document");
  narrate_cmd->add_option("--wiki-cache", na.wiki_cache, "Summary cache file (JSON object label -> text)");
  narrate_cmd->add_option("--templates", na.templates, "Sentence template overrides (JSON)");

  std::string graph_path;
  auto* validate_cmd = app.add_subcommand("validate", "Report invariant violations of a graph document");
  validate_cmd->add_option("graph", graph_path, "Graph document (JSON)")->required();

  std::optional<std::string> config_path;
  std::optional<int> port;
  std::optional<std::string> data_dir;
  std::optional<std::string> host;
  bool verbose = false;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", config_path, "Config file (JSON)");
  serve_cmd->add_option("--port", port, "Listen port (overrides PORT)");
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--data-dir", data_dir, "Data directory (overrides DATA_DIR)");
  serve_cmd->add_flag("-v,--verbose", verbose, "Log requests and storage events");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*narrate_cmd) return narrate(na);
    if (*validate_cmd) return validate(graph_path);
    if (*serve_cmd) {
      if (verbose) spdlog::set_level(spdlog::level::info);
      auto cfg = cw::load_config(config_path);
      if (port) cfg.port = *port;
      if (host) cfg.host = *host;
      if (data_dir) cfg.data_dir = *data_dir;
      return cw::run_server(cfg) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
