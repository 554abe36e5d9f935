#pragma once

#include <openssl/evp.h>

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <spdlog/spdlog.h>

#include "causeworks/io.hpp"
#include "causeworks/narrative.hpp"
#include "causeworks/wiki.hpp"

namespace causeworks {

enum class WikiMode { offline, live };

inline WikiMode parse_wiki_mode(const std::string& s) {
  if (s == "offline") return WikiMode::offline;
  if (s == "live") return WikiMode::live;
  throw Error(ErrorKind::invalid_argument, "WIKI_MODE must be 'offline' or 'live', got '" + s + "'");
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "causeworks-data";
  WikiMode wiki_mode = WikiMode::offline;
  std::filesystem::path wiki_cache;  // empty: <data_dir>/wiki_cache.json
  std::filesystem::path templates;   // empty: built-in templates

  std::filesystem::path wiki_cache_path() const {
    return wiki_cache.empty() ? data_dir / "wiki_cache.json" : wiki_cache;
  }
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

// Optional JSON config file, then PORT / DATA_DIR / WIKI_MODE overrides.
inline ServiceConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env) {
  ServiceConfig cfg;
  if (file) {
    const auto doc = detail::parse_text(detail::read_file(file->string()), file->string());
    detail::only_fields(doc, file->string(), {"host", "port", "data_dir", "wiki_mode", "wiki_cache", "templates"}, {});
    const auto where = file->string();
    if (doc.contains("host")) cfg.host = detail::field<std::string>(doc, "host", where);
    if (doc.contains("port")) cfg.port = detail::field<int>(doc, "port", where);
    if (doc.contains("data_dir")) cfg.data_dir = detail::field<std::string>(doc, "data_dir", where);
    if (doc.contains("wiki_mode")) cfg.wiki_mode = parse_wiki_mode(detail::field<std::string>(doc, "wiki_mode", where));
    if (doc.contains("wiki_cache")) cfg.wiki_cache = detail::field<std::string>(doc, "wiki_cache", where);
    if (doc.contains("templates")) cfg.templates = detail::field<std::string>(doc, "templates", where);
  }
  if (auto port = env("PORT")) {
    try {
      std::size_t used = 0;
      cfg.port = std::stoi(*port, &used);
      if (used != port->size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_argument, "PORT must be an integer, got '" + *port + "'");
    }
  }
  if (auto dir = env("DATA_DIR")) cfg.data_dir = *dir;
  if (auto mode = env("WIKI_MODE")) cfg.wiki_mode = parse_wiki_mode(*mode);
  if (cfg.port < 0 || cfg.port > 65535) throw Error(ErrorKind::invalid_argument, "port out of range");
  return cfg;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::io, "sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

// Immutable graph versions on disk at <dir>/<sha256 of canonical JSON>.json.
class GraphStore {
 public:
  explicit GraphStore(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  static std::string canonical(const CausalGraph& g) { return json(to_json(g)).dump(); }

  std::string put(const CausalGraph& g) {
    const auto text = canonical(g);
    const auto version = sha256_hex(text);
    std::unique_lock lock(mutex_);
    if (cache_.count(version)) return version;
    const auto path = dir_ / (version + ".json");
    if (!std::filesystem::exists(path)) {
      const auto tmp = path.string() + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error(ErrorKind::io, "cannot write " + tmp);
        out << text;
      }
      std::filesystem::rename(tmp, path);
    }
    cache_.emplace(version, std::make_shared<const CausalGraph>(g));
    return version;
  }

  std::shared_ptr<const CausalGraph> get(const std::string& version) const {
    if (version.empty() || version.find_first_not_of("0123456789abcdef") != std::string::npos) {
      throw Error(ErrorKind::not_found, "no graph version '" + version + "'");
    }
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(version); it != cache_.end()) return it->second;
    }
    const auto path = dir_ / (version + ".json");
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::not_found, "no graph version '" + version + "'");
    auto g = std::make_shared<const CausalGraph>(load_graph(path.string()));
    std::unique_lock lock(mutex_);
    return cache_.emplace(version, std::move(g)).first->second;
  }

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const CausalGraph>> cache_;
};

struct Session {
  std::string id;
  std::string graph_version;
  std::vector<InterventionSpec> interventions;
  ObjectiveSet objectives;
  NarrativeScope scope = NarrativeScope::cumulative;
  Budget budget = kDefaultBudget;
  int horizon = kDefaultHorizon;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t revision = 1;
};

inline ordered_json to_json(const Session& s) {
  ordered_json j;
  j["id"] = s.id;
  j["graph_version"] = s.graph_version;
  j["revision"] = s.revision;
  j["interventions"] = ordered_json::array();
  for (const auto& iv : s.interventions) j["interventions"].push_back(to_json(iv));
  j["objectives"] = s.objectives.nodes;
  j["scope"] = to_string(s.scope);
  if (s.budget) {
    j["budget"] = *s.budget;
  } else {
    j["budget"] = nullptr;
  }
  j["horizon"] = s.horizon;
  j["seed"] = s.seed;
  return j;
}

// Accepts a non-negative integer, or null / "inf" for an unrestricted budget.
inline Budget budget_from_json(const json& v) {
  if (v.is_null() || (v.is_string() && (v == "inf" || v == "infinity"))) return std::nullopt;
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::size_t>(v.get<std::int64_t>());
  throw Error(ErrorKind::parse, "/budget: expected a non-negative integer, null or \"inf\"");
}

inline std::string dump(const ordered_json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

struct Response {
  int status = 200;
  std::string body;
};

inline Response json_response(int status, const ordered_json& body) { return {status, dump(body)}; }

inline int http_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::cycle: return 422;
    case ErrorKind::io: return 502;
    default: return 400;
  }
}

inline Response error_response(const Error& e) {
  ordered_json body{{"error", to_string(e.kind())}, {"message", e.what()}};
  if (e.kind() == ErrorKind::parse) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    if (!msg.empty() && msg[0] == '/' && colon != std::string::npos) body["location"] = msg.substr(0, colon);
  }
  if (const auto* gv = dynamic_cast<const GraphValidationError*>(&e)) {
    body["violations"] = ordered_json::array();
    for (const auto& v : gv->report().violations) body["violations"].push_back(v.message);
    if (auto cycles = gv->report().cycles(); !cycles.empty()) body["cycle"] = cycles.front();
  }
  return json_response(http_status(e.kind()), body);
}

// Request handling independent of the HTTP transport. Each method returns
// the status and JSON body of one endpoint.
class Service {
 public:
  explicit Service(ServiceConfig config, std::shared_ptr<WikiSummaryProvider> provider = nullptr)
      : config_(std::move(config)), store_(config_.data_dir / "graphs"), provider_(std::move(provider)) {
    if (!config_.templates.empty()) templates_ = TemplateSet::load(config_.templates.string());
  }

  const ServiceConfig& config() const { return config_; }
  GraphStore& store() { return store_; }

  // PUT /graphs
  Response put_graph(const std::string& body) {
    return guarded([&] {
      json doc;
      try {
        doc = json::parse(body);
      } catch (const json::parse_error& e) {
        return json_response(400, {{"error", "parse"},
                                   {"message", std::string("malformed graph document: ") + e.what()},
                                   {"location", "byte " + std::to_string(e.byte)}});
      }
      const auto g = graph_from_json(doc);
      const auto version = store_.put(g);
      spdlog::info("stored graph version {} ({} nodes)", version, g.size());
      return json_response(201, {{"version", version}});
    });
  }

  // GET /graphs/{version}
  Response get_graph(const std::string& version) {
    return guarded([&] { return json_response(200, to_json(*store_.get(version))); });
  }

  // POST /sessions
  Response create_session(const std::string& body) {
    return guarded([&] {
      const auto doc = detail::parse_text(body, "session");
      detail::only_fields(doc, "", {"graph_version", "interventions", "objectives", "scope", "budget", "horizon", "seed"},
                          {"graph_version"});
      Session s;
      s.graph_version = detail::field<std::string>(doc, "graph_version", "");
      if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw Error(ErrorKind::parse, "/seed: expected a non-negative integer");
        s.seed = doc["seed"].get<std::uint64_t>();
      }
      apply_patch(s, doc);
      std::unique_lock lock(mutex_);
      s.id = "s" + std::to_string(++session_counter_);
      sessions_[s.id] = s;
      return json_response(201, to_json(s));
    });
  }

  // PATCH /sessions/{id}; last writer wins, each write bumps the revision.
  Response patch_session(const std::string& id, const std::string& body) {
    return guarded([&] {
      const auto doc = detail::parse_text(body, "session patch");
      detail::only_fields(doc, "", {"graph_version", "interventions", "objectives", "scope", "budget", "horizon"}, {});
      std::unique_lock lock(mutex_);
      auto& current = find_session(id);
      Session next = current;
      if (doc.contains("graph_version")) next.graph_version = detail::field<std::string>(doc, "graph_version", "");
      apply_patch(next, doc);
      ++next.revision;
      current = next;
      return json_response(200, to_json(current));
    });
  }

  // GET /sessions/{id}
  Response get_session(const std::string& id) {
    return guarded([&] {
      std::shared_lock lock(mutex_);
      return json_response(200, to_json(find_session(id)));
    });
  }

  // GET /sessions/{id}/narrative
  Response narrative(const std::string& id) {
    return guarded([&] {
      const auto s = snapshot(id);
      const auto g = store_.get(s.graph_version);
      const auto result = run(s, *g);
      ordered_json body;
      body["graph_version"] = s.graph_version;
      body["session_revision"] = s.revision;
      body["narrative"] = to_json(result.doc);
      body["trace"] = trace_summary(result.trace);
      body["encodings"] = visual_encodings(*g, result.trace);
      return json_response(200, body);
    });
  }

  // GET /sessions/{id}/trace
  Response trace(const std::string& id) {
    return guarded([&] {
      const auto s = snapshot(id);
      const auto g = store_.get(s.graph_version);
      ordered_json body;
      body["graph_version"] = s.graph_version;
      body["trace"] = to_json(propagate(*g, s.interventions, s.horizon));
      return json_response(200, body);
    });
  }

  // GET /sessions/{id}/search?q=
  Response search(const std::string& id, const std::string& query) {
    return guarded([&] {
      const auto s = snapshot(id);
      const auto g = store_.get(s.graph_version);
      const auto result = run(s, *g);
      ordered_json body;
      body["graph_version"] = s.graph_version;
      body["query"] = query;
      body["hits"] = ordered_json::array();
      for (const auto& hit : causeworks::search(result.doc, query)) {
        ordered_json h{{"start", hit.start}, {"end", hit.end}};
        if (hit.node) h["node"] = *hit.node;
        body["hits"].push_back(h);
      }
      return json_response(200, body);
    });
  }

  // The narrative a session currently describes; shared with the CLI path.
  NarrativeResult run(const Session& s, const CausalGraph& g) const {
    if (s.interventions.empty() || s.objectives.nodes.empty()) {
      throw Error(ErrorKind::conflict, "select interventions and objectives");
    }
    NarrativeRequest req;
    req.interventions = s.interventions;
    req.objectives = s.objectives;
    req.horizon = s.horizon;
    req.scope = s.scope;
    req.budget = s.budget;
    req.seed = s.seed;
    return generate_narrative(g, req, provider_.get(), templates_);
  }

 private:
  template <typename F>
  static Response guarded(F&& f) {
    try {
      return f();
    } catch (const Error& e) {
      return error_response(e);
    } catch (const json::exception& e) {
      return error_response(Error(ErrorKind::parse, e.what()));
    }
  }

  void apply_patch(Session& s, const json& doc) const {
    if (doc.contains("interventions")) s.interventions = interventions_from_json(doc["interventions"], "/interventions");
    if (doc.contains("objectives")) s.objectives = objectives_from_json(doc["objectives"], "/objectives");
    if (doc.contains("scope")) s.scope = parse_scope(detail::field<std::string>(doc, "scope", ""));
    if (doc.contains("budget")) s.budget = budget_from_json(doc["budget"]);
    if (doc.contains("horizon")) {
      s.horizon = detail::field<int>(doc, "horizon", "");
      if (s.horizon < 1) throw Error(ErrorKind::invalid_argument, "horizon must be at least 1");
    }
    const auto g = store_.get(s.graph_version);
    try {
      validate_interventions(*g, s.interventions, s.horizon);
      validate_objectives(*g, s.objectives);
    } catch (const Error& e) {
      // An unknown node in the request body is a bad request, not a missing resource.
      if (e.kind() == ErrorKind::not_found) throw Error(ErrorKind::invalid_argument, e.what());
      throw;
    }
  }

  Session& find_session(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorKind::not_found, "no session '" + id + "'");
    return it->second;
  }

  Session snapshot(const std::string& id) {
    std::shared_lock lock(mutex_);
    return find_session(id);
  }

  ServiceConfig config_;
  GraphStore store_;
  std::shared_ptr<WikiSummaryProvider> provider_;
  TemplateSet templates_;
  std::shared_mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::uint64_t session_counter_ = 0;
};

}  // namespace causeworks
