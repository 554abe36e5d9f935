#pragma once

#include <httplib.h>

#include <memory>
#include <string>

#include <spdlog/spdlog.h>

#include "causeworks/service.hpp"
#include "causeworks/wiki_http.hpp"

namespace causeworks {

namespace detail {

inline void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json; charset=utf-8");
}

}  // namespace detail

// Routes:
//   PUT   /graphs                    GET /graphs/{version}
//   POST  /sessions                  GET /sessions/{id}
//   PATCH /sessions/{id}             GET /sessions/{id}/narrative
//   GET   /sessions/{id}/trace       GET /sessions/{id}/search?q=
inline void bind_routes(httplib::Server& server, Service& service) {
  using httplib::Request;
  using httplib::Response;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, PUT, POST, PATCH, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const Request&, Response& res) { res.status = 204; });

  server.Put("/graphs", [&](const Request& req, Response& res) { detail::send(res, service.put_graph(req.body)); });
  server.Get(R"(/graphs/([^/]+))", [&](const Request& req, Response& res) {
    detail::send(res, service.get_graph(req.matches[1]));
  });
  server.Post("/sessions", [&](const Request& req, Response& res) {
    detail::send(res, service.create_session(req.body));
  });
  server.Get(R"(/sessions/([^/]+))", [&](const Request& req, Response& res) {
    detail::send(res, service.get_session(req.matches[1]));
  });
  server.Patch(R"(/sessions/([^/]+))", [&](const Request& req, Response& res) {
    detail::send(res, service.patch_session(req.matches[1], req.body));
  });
  server.Get(R"(/sessions/([^/]+)/narrative)", [&](const Request& req, Response& res) {
    detail::send(res, service.narrative(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/trace)", [&](const Request& req, Response& res) {
    detail::send(res, service.trace(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/search)", [&](const Request& req, Response& res) {
    detail::send(res, service.search(req.matches[1], req.get_param_value("q")));
  });
  server.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("unhandled exception: {}", what);
    detail::send(res, json_response(500, {{"error", "internal"}, {"message", what}}));
  });
}

// Summary provider for a configuration: the offline cache, optionally
// backed by live lookups that write through to it.
inline std::shared_ptr<WikiSummaryProvider> make_provider(const ServiceConfig& cfg) {
  auto cache = std::make_shared<OfflineWikiCache>(cfg.wiki_cache_path());
  if (cfg.wiki_mode == WikiMode::offline) return cache;
  return std::make_shared<LiveWikiProvider>(cache, https_summary_fetcher());
}

// Blocks until the server stops.
inline bool run_server(const ServiceConfig& cfg) {
  Service service(cfg, make_provider(cfg));
  httplib::Server server;
  bind_routes(server, service);
  spdlog::info("listening on {}:{} (data dir {}, wiki {})", cfg.host, cfg.port, cfg.data_dir.string(),
               cfg.wiki_mode == WikiMode::live ? "live" : "offline");
  return server.listen(cfg.host, cfg.port);
}

}  // namespace causeworks
