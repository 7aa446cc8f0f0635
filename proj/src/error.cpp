#include "poisonlens/error.hpp"

namespace poisonlens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::ZeroKernel: return "ZeroKernel";
    case ErrorCode::GeometryOutOfBounds: return "GeometryOutOfBounds";
    case ErrorCode::CollinearFeature: return "CollinearFeature";
    case ErrorCode::ZeroCoefficient: return "ZeroCoefficient";
    case ErrorCode::StepDiverged: return "StepDiverged";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::FitFailed: return "FitFailed";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace poisonlens
