#pragma once

#include <stdexcept>
#include <string>

namespace prism {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented invariant (range, completeness, shape).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed configuration (column maps, env, calibration files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model response could not be turned into a structured analysis.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Transport to the model endpoint failed after all retries.
class GatewayError : public Error {
 public:
  GatewayError(const std::string& what, int status = 0)
      : Error(what), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Replay mode was asked for a request that is not in the fixture.
class FixtureMissError : public GatewayError {
 public:
  explicit FixtureMissError(std::string tag)
      : GatewayError("replay fixture has no entry for tag " + tag), tag_(std::move(tag)) {}

  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

/// A stored row exists but cannot be decoded.
class IntegrityError : public StorageError {
 public:
  IntegrityError(const std::string& user_id, const std::string& detail)
      : StorageError("integrity error for user '" + user_id + "': " + detail), user_id_(user_id) {}

  const std::string& user_id() const noexcept { return user_id_; }

 private:
  std::string user_id_;
};

/// A statistic is undefined for the given input (e.g. zero variance).
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

}  // namespace prism
