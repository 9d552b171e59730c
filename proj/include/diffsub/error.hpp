#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffsub {

enum class ErrorKind {
  NotFound,
  SchemaMismatch,
  ParseError,
  EmptyGroup,
  IndexOutOfRange,
  InvalidConfig,
  NonPositiveTemperature,
  AllWeightsZero,
  DimensionMismatch,
  ZeroTotalWeight,
  UnfittedEstimator,
  InsufficientData,
  TaskMismatch,
  StaleDensities,
  NonFiniteLoss,
  EmptySubgroupInGroup,
  CoverageCalibrationFailure,
  LengthMismatch,
  MissingTruth,
  Timeout,
  Internal,
};

std::string_view kind_name(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to an exit code and a machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace diffsub
