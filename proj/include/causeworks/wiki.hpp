#pragma once

#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "causeworks/error.hpp"
#include "causeworks/utf8.hpp"

namespace causeworks {

// Looks up a short descriptive paragraph for a process label. Returns
// nullopt when no entry exists; throws Error(io) when the source itself is
// unavailable.
class WikiSummaryProvider {
 public:
  virtual ~WikiSummaryProvider() = default;
  virtual std::optional<std::string> summary(const std::string& label) = 0;
};

// Label -> paragraph map persisted as a JSON object.
class OfflineWikiCache : public WikiSummaryProvider {
 public:
  OfflineWikiCache() = default;
  explicit OfflineWikiCache(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    if (!in) throw Error(ErrorKind::io, "cannot read wiki cache " + path_.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path_.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::parse, path_.string() + ": wiki cache must be an object");
    for (const auto& [label, text] : doc.items()) {
      if (!text.is_string()) throw Error(ErrorKind::parse, path_.string() + ": entry '" + label + "' is not a string");
      entries_.emplace(label, text.get<std::string>());
    }
  }

  std::optional<std::string> summary(const std::string& label) override {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(label);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  // Writes are serialized and flushed to disk through a temporary file.
  void put(const std::string& label, const std::string& text) {
    std::lock_guard lock(mutex_);
    entries_[label] = text;
    if (path_.empty()) return;
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& [k, v] : entries_) doc[k] = v;
    const auto tmp = path_.string() + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw Error(ErrorKind::io, "cannot write wiki cache " + tmp);
      out << doc.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path_);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  std::filesystem::path path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

// Function used by LiveWikiProvider to fetch a page summary; returns the
// HTTP status and body. Injected so tests never touch the network.
using SummaryFetcher = std::function<std::pair<int, std::string>(const std::string& title)>;

inline std::string url_encode_title(const std::string& label) {
  std::string out;
  for (unsigned char c : label) {
    if (c == ' ') {
      out += '_';
    } else if (std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == '(' || c == ')') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

// Cache first, then the fetcher; successful lookups are written back to the
// cache. A transport failure raises Error(io).
class LiveWikiProvider : public WikiSummaryProvider {
 public:
  LiveWikiProvider(std::shared_ptr<OfflineWikiCache> cache, SummaryFetcher fetch)
      : cache_(std::move(cache)), fetch_(std::move(fetch)) {}

  std::optional<std::string> summary(const std::string& label) override {
    if (auto hit = cache_->summary(label)) return hit;
    auto [status, body] = fetch_(url_encode_title(label));
    if (status == 404) return std::nullopt;
    if (status != 200) throw Error(ErrorKind::io, "summary lookup for '" + label + "' failed with status " +
                                                      std::to_string(status));
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("extract") || !doc["extract"].is_string()) return std::nullopt;
    auto text = doc["extract"].get<std::string>();
    if (text.empty()) return std::nullopt;
    cache_->put(label, text);
    return text;
  }

 private:
  std::shared_ptr<OfflineWikiCache> cache_;
  SummaryFetcher fetch_;
};

// First paragraph, cut after the last whole sentence that fits in
// `max_chars` code points. A first sentence longer than that is cut at a
// word boundary and marked with an ellipsis.
inline std::string truncate_summary(const std::string& text, std::size_t max_chars = 280) {
  std::string para = text.substr(0, text.find('\n'));
  while (!para.empty() && (para.back() == ' ' || para.back() == '\r')) para.pop_back();
  if (utf8::length(para) <= max_chars) return para;

  std::size_t best = std::string::npos;
  for (std::size_t i = 0; i < para.size(); ++i) {
    const char c = para[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 < para.size() && para[i + 1] != ' ') continue;
    if (utf8::length(std::string_view(para).substr(0, i + 1)) > max_chars) break;
    best = i + 1;
  }
  if (best != std::string::npos) return para.substr(0, best);

  std::string cut = utf8::substr(para, 0, max_chars - 1);
  auto space = cut.rfind(' ');
  if (space != std::string::npos && space > 0) cut.resize(space);
  return cut + "…";
}

}  // namespace causeworks
