#pragma once

#include <stdexcept>
#include <string>

namespace graftnet {

// Bad configuration: shapes that do not line up, invalid hyper-parameters,
// networks that are not congruent. CLI maps these to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller passed a value outside the documented domain.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation called in the wrong order (e.g. backward before forward).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed text or binary input. Carries the 1-based line when known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  long line;
};

// Well-formed input with semantically invalid content (label out of range).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violation of the multi-trainer barrier protocol.
struct ProtocolError : std::logic_error {
  using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace graftnet
