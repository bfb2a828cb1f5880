#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace scits {

// Malformed workload document. The message names the offending element.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed document whose values break an invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& constraint)
      : std::runtime_error(field + ": " + constraint), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A run cannot be set up with the given parameters (e.g. more clients than sensors).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The generator would emit a timestamp past start_time + day_span.
class SpanExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure reported by, or while talking to, a database backend.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}

  // True for transport-level failures (connect, I/O, timeout).
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

}  // namespace scits
