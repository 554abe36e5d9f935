#pragma once

// Requires httplib.h built with CPPHTTPLIB_OPENSSL_SUPPORT.
#include <httplib.h>

#include <string>

#include "causeworks/wiki.hpp"

namespace causeworks {

inline constexpr const char* kSummaryHost = "https://en.wikipedia.org";
inline constexpr const char* kSummaryPath = "/api/rest_v1/page/summary/";

// Fetches page summaries over HTTPS with a 2 s connect/read timeout per
// label. Transport failures surface as status 0 so LiveWikiProvider raises.
inline SummaryFetcher https_summary_fetcher(std::string host = kSummaryHost, std::string path = kSummaryPath) {
  return [host = std::move(host), path = std::move(path)](const std::string& title) -> std::pair<int, std::string> {
    httplib::Client client(host);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(2, 0);
    client.set_write_timeout(2, 0);
    client.set_follow_location(true);
    auto res = client.Get(path + title, {{"Accept", "application/json"}, {"User-Agent", "causeworks/1.0"}});
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
  };
}

}  // namespace causeworks
