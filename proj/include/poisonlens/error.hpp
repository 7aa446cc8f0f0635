#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poisonlens {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  RankDeficient,
  SingularSystem,
  EmptyDataset,
  NegativeCount,
  ZeroKernel,
  GeometryOutOfBounds,
  CollinearFeature,
  ZeroCoefficient,
  StepDiverged,
  GridMismatch,
  FitFailed,
  InvalidConfig,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// sweep runners can tag failed cells without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

inline void require_same_dim(long a, long b, std::string_view where) {
  if (a != b) {
    raise(ErrorCode::DimensionMismatch,
          std::string(where) + ": dimension " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace poisonlens
