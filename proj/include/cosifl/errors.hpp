#pragma once
#include <stdexcept>
#include <string>

namespace cosifl {

// Scenario or artifact file could not be read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input text is not well-formed JSON.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario parsed but violates the schema; message names field + constraint.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A well-formed scenario admits no feasible plan (e.g. empty T range).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition of an algorithmic operation violated at runtime.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cosifl
