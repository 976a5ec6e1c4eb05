#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace drdid {

inline constexpr const char* kVersion = "0.1.0";

// Error categories map onto CLI exit codes: ConfigError -> 2,
// DataError -> 3, NumericalError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct MissingColumn : DataError {
  using DataError::DataError;
};

struct NonFiniteValue : DataError {
  using DataError::DataError;
};

struct DegenerateTreatment : DataError {
  using DataError::DataError;
};

struct DegenerateZ : DataError {
  using DataError::DataError;
};

struct DimensionMismatch : DataError {
  using DataError::DataError;
};

struct InsufficientStratum : DataError {
  using DataError::DataError;
};

struct BasisTooLarge : ConfigError {
  using ConfigError::ConfigError;
};

struct LearnerFailure : NumericalError {
  using NumericalError::NumericalError;
};

struct Infeasible : NumericalError {
  using NumericalError::NumericalError;
};

struct SingularDesign : NumericalError {
  using NumericalError::NumericalError;
};

struct SingularSigmaF : NumericalError {
  using NumericalError::NumericalError;
};

struct ZeroXi : ConfigError {
  using ConfigError::ConfigError;
};

struct AllRepsFailed : NumericalError {
  using NumericalError::NumericalError;
};

// Runs body(i) for i in [0, count). With threads <= 1 the loop runs inline;
// otherwise a worker pool pulls indices from a shared counter. Results must
// be written to disjoint slots so the schedule cannot affect the outcome.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace drdid
