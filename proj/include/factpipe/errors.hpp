#pragma once

// Typed error hierarchy. Every recoverable failure in the pipeline is an
// exception derived from Error so callers can match on the exact kind.

#include <stdexcept>
#include <string>
#include <utility>

namespace factpipe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- claim model ---

class MalformedPredicate : public Error {
 public:
  MalformedPredicate(const std::string& reason, std::string line)
      : Error("malformed predicate (" + reason + "): " + line), line_(std::move(line)) {}
  const std::string& line() const noexcept { return line_; }

 private:
  std::string line_;
};

class DecompositionParseError : public Error {
 public:
  using Error::Error;
};

// --- llm gateway ---

class MissingBinding : public Error {
 public:
  explicit MissingBinding(std::string placeholder)
      : Error("missing binding for placeholder {" + placeholder + "}"),
        placeholder_(std::move(placeholder)) {}
  const std::string& placeholder() const noexcept { return placeholder_; }

 private:
  std::string placeholder_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class RateLimited : public TransportError {
 public:
  using TransportError::TransportError;
};

class Timeout : public TransportError {
 public:
  using TransportError::TransportError;
};

class AuthFailure : public Error {
 public:
  using Error::Error;
};

class NoJsonFound : public Error {
 public:
  using Error::Error;
};

class MockMiss : public Error {
 public:
  using Error::Error;
};

// --- ingestion agent ---

class EmptyDecomposition : public Error {
 public:
  using Error::Error;
};

class UnparseableClassification : public Error {
 public:
  using Error::Error;
};

// --- query agent ---

class QueryParseError : public Error {
 public:
  using Error::Error;
};

class EmptyQuerySet : public Error {
 public:
  using Error::Error;
};

// --- retrieval ---

class QuotaExceeded : public TransportError {
 public:
  using TransportError::TransportError;
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
};

class FetchError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

// --- verdict agent ---

class VerdictParseError : public Error {
 public:
  using Error::Error;
};

// --- evaluation ---

class FormatError : public Error {
 public:
  FormatError(std::size_t line_number, const std::string& reason)
      : Error("line " + std::to_string(line_number) + ": " + reason), line_number_(line_number) {}
  std::size_t line_number() const noexcept { return line_number_; }

 private:
  std::size_t line_number_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class MissingMethod : public Error {
 public:
  using Error::Error;
};

class JudgeParseError : public Error {
 public:
  using Error::Error;
};

class InvalidPermutation : public Error {
 public:
  using Error::Error;
};

// --- orchestrator / cli ---

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& reason)
      : Error("stage '" + stage + "' failed: " + reason), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Retry classification used by the orchestrator and the backends: transport
// faults are retried with backoff, parse faults retried once, the rest not.
inline bool is_transport_class(const std::exception& e) noexcept {
  return dynamic_cast<const TransportError*>(&e) != nullptr;
}

inline bool is_parse_class(const std::exception& e) noexcept {
  return dynamic_cast<const DecompositionParseError*>(&e) != nullptr ||
         dynamic_cast<const QueryParseError*>(&e) != nullptr ||
         dynamic_cast<const VerdictParseError*>(&e) != nullptr;
}

}  // namespace factpipe
