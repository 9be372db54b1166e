#pragma once

#include <stdexcept>
#include <string>

namespace acoustaxel {

/// Failure categories. The CLI maps `io` to exit code 2 and everything else to 1.
enum class ErrorKind {
  config,
  size,
  parse,
  unsupported_format,
  io,
  bounds,
  length,
  validation,
  shape,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "configuration error";
    case ErrorKind::size: return "size error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::unsupported_format: return "unsupported format";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::bounds: return "bounds error";
    case ErrorKind::length: return "length error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::shape: return "shape error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace acoustaxel
