#include "diffsub/error.hpp"

namespace diffsub {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::AllWeightsZero: return "AllWeightsZero";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroTotalWeight: return "ZeroTotalWeight";
    case ErrorKind::UnfittedEstimator: return "UnfittedEstimator";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::TaskMismatch: return "TaskMismatch";
    case ErrorKind::StaleDensities: return "StaleDensities";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::EmptySubgroupInGroup: return "EmptySubgroupInGroup";
    case ErrorKind::CoverageCalibrationFailure: return "CoverageCalibrationFailure";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MissingTruth: return "MissingTruth";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace diffsub
