#pragma once

#include <stdexcept>
#include <string>

namespace maxent {

// Every library failure derives from Error so callers can catch once and
// map the concrete type to an exit code or an API error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

class PolynomialError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class QueryParseError : public Error {
 public:
  using Error::Error;
};

class PlanTooLargeError : public Error {
 public:
  using Error::Error;
};

class SummaryError : public Error {
 public:
  enum class Kind { Malformed, Version, Checksum, Mismatch, Io };

  SummaryError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace maxent
