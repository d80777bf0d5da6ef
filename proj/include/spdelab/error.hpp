#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spdelab {

/// Machine-readable failure categories. The CLI maps these to exit codes and
/// prints the reason string verbatim.
enum class ErrorCode {
  validation,
  parse,
  schema,
  invariant,
  cross_field,
  momentum_conservation,
  unsupported_operator,
  singular_configuration,
  configuration,
  numeric,
  resource,
  internal,
};

constexpr std::string_view reason(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::parse: return "parse";
    case ErrorCode::schema: return "schema";
    case ErrorCode::invariant: return "invariant";
    case ErrorCode::cross_field: return "cross_field";
    case ErrorCode::momentum_conservation: return "momentum_conservation";
    case ErrorCode::unsupported_operator: return "unsupported_operator";
    case ErrorCode::singular_configuration: return "singular_configuration";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::resource: return "resource";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace spdelab
