#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace symptomrank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text or binary data. Carries a location when one is known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that breaks a domain rule (counts, ids, label consistency).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A metric that has no defined value for the given input (e.g. no relevant docs).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Oracle backend failures.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Transient backend failure (timeouts, 429, 5xx). Retried by request_relevance.
class TransientError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// Non-retryable backend failure such as HTTP 4xx.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// The oracle answered, but not with a usable grade.
class OracleFormatError : public Error {
 public:
  OracleFormatError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace symptomrank
