#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace statplan {

// Argument outside an operation's mathematical domain (bad alpha, invalid
// interval, mismatched confidence levels).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// No trials were observed for the reference event. Distinct from a wide
// interval: callers must not treat it as [0,1].
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or stream. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A knowledge-base file whose stored counts disagree with a replay of its log.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario, action binding or rule configuration that cannot be executed.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace statplan
