#pragma once

#include <stdexcept>
#include <string>

namespace tdse {

enum class ErrorCode {
  MalformedRow,
  NonPositivePrice,
  DuplicateDate,
  SeriesTooShort,
  InsufficientHistory,
  EmptyResult,
  MissingSource,
  KernelTooLong,
  DegenerateBatch,
  ShapeMismatch,
  EmptySequence,
  NonPositiveSigma,
  ZeroDegreeRow,
  ConvergenceFailure,
  TooFewRows,
  RangeTooNarrow,
  EmptyBranch,
  TooFewSamples,
  EmptyEvidenceList,
  InvalidMass,
  EmptyValidation,
  SingleClassTraining,
  KTooLarge,
  NoConvergence,
  LengthMismatch,
  Empty,
  SingleClassLabels,
  ZeroVariance,
  EmptyCurve,
  InvalidConfig,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report it in machine-readable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tdse
