#pragma once

#include <stdexcept>
#include <string>

namespace causeworks {

enum class ErrorKind {
  invalid_argument,
  not_found,
  parse,
  invalid_graph,
  cycle,
  conflict,
  io,
};

// Single exception type for the library; callers switch on kind() to map
// failures onto exit codes or HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invalid_graph: return "invalid-graph";
    case ErrorKind::cycle: return "cycle";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace causeworks
