#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace racesim {

// Raised when an input violates a documented precondition. `field()` names
// the offending parameter or flag.
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)), message_(what) {}

  const std::string& field() const noexcept { return field_; }
  // The text without the field prefix.
  const std::string& message() const noexcept { return message_; }

private:
  std::string field_;
  std::string message_;
};

// A boundary formula evaluated where its denominator vanishes.
class SingularBoundaryError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Malformed text input; `line()` is 1-based.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace racesim
