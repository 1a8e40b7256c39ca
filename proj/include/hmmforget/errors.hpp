#pragma once

#include <stdexcept>
#include <string>

namespace hmmforget {

// Root of everything the library throws. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model construction / ingestion failures.
class ModelValidationError : public Error {
 public:
  using Error::Error;
};
class RowSumError : public ModelValidationError {
 public:
  using ModelValidationError::ModelValidationError;
};
class NegativeEntryError : public ModelValidationError {
 public:
  using ModelValidationError::ModelValidationError;
};
class ReducibleChainError : public ModelValidationError {
 public:
  using ModelValidationError::ModelValidationError;
};
class PeriodicChainError : public ModelValidationError {
 public:
  using ModelValidationError::ModelValidationError;
};
class StationaryConvergenceError : public ModelValidationError {
 public:
  using ModelValidationError::ModelValidationError;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};
class LengthMismatchError : public DimensionMismatchError {
 public:
  using DimensionMismatchError::DimensionMismatchError;
};

class AssumptionAError : public Error {
 public:
  using Error::Error;
};
class NotPrimitiveError : public AssumptionAError {
 public:
  using AssumptionAError::AssumptionAError;
};

class ZeroLikelihoodError : public Error {
 public:
  using Error::Error;
};
class NotAProbabilityError : public Error {
 public:
  using Error::Error;
};
class NoValidRowsError : public Error {
 public:
  using Error::Error;
};

// Not a failure of the code: every sampled distance was exactly zero, so there is
// no slope to fit.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class ConfigParseError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmmforget
