#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hakg {

// Root of every error the library throws. Each subclass names the failure
// class so callers (the CLI in particular) can map it to a message or exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
  using Error::Error;
};

class EmptyDatasetError : public Error {
  using Error::Error;
};

class ExhaustionError : public Error {
  using Error::Error;
};

class ShapeError : public Error {
  using Error::Error;
};

class NumericError : public Error {
  using Error::Error;
};

class ContractError : public Error {
  using Error::Error;
};

class FormatError : public Error {
  using Error::Error;
};

class CacheError : public Error {
  using Error::Error;
};

class ConfigError : public Error {
  using Error::Error;
};

// Bad command line or unknown configuration key.
class UsageError : public ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace hakg
