#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace flowlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelEvaluationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class EllipticityError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  EstimationError(const std::string& what, std::int64_t divergent)
      : Error(what), divergent_(divergent) {}
  std::int64_t divergent() const { return divergent_; }

 private:
  std::int64_t divergent_;
};

class ConditionError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace flowlab
