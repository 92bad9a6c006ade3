#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace panicsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// A feature extractor could not produce a value for a user.
class FeatureUnavailable : public Error {
 public:
  FeatureUnavailable(std::string user_id, std::string extractor, const std::string& detail = {})
      : Error("feature '" + extractor + "' unavailable for user '" + user_id + "'" +
              (detail.empty() ? "" : ": " + detail)),
        user_id_(std::move(user_id)),
        extractor_(std::move(extractor)) {}

  const std::string& user_id() const { return user_id_; }
  const std::string& extractor() const { return extractor_; }

 private:
  std::string user_id_;
  std::string extractor_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

// Gateway errors.

class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::size_t attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempt(s))"), attempts_(attempts) {}
  std::size_t attempts() const { return attempts_; }

 private:
  std::size_t attempts_;
};

class ProviderRefusal : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Raised by the mock provider when a test issues a turn its script does not cover.
class UnscriptedTurn : public Error {
 public:
  using Error::Error;
};

// Structured-output parse failures.

class ParseError : public Error {
 public:
  using Error::Error;
};

class RetryableParseError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ToneUnavailable : public ParseError {
 public:
  using ParseError::ParseError;
};

class ArousalParseError : public ParseError {
 public:
  using ParseError::ParseError;
};

class GenerationParseError : public ParseError {
 public:
  using ParseError::ParseError;
};

class VerdictParseError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ClassificationUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace panicsim
