#pragma once

#include <stdexcept>
#include <string>

namespace posetrans {

enum class ErrorCode {
  InvalidArgument,
  IoError,
  MalformedFile,
  SchemaError,
  DimensionMismatch,
  LabelOutOfRange,
  DegenerateBox,
  NonConvergent,
  InvalidScale,
  SingularMatrix,
  NoTransformableLimb,
  FullMask,
  EmptyImage,
  InsufficientData,
  DegenerateComponent,
  AllZeroDensity,
  EmptyPool,
  NoLabeledKeypoints,
  NoGroundTruth,
  Diverged,
};

const char* error_code_name(ErrorCode code);

/// Library-wide exception type; every throwing operation uses this.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace posetrans
