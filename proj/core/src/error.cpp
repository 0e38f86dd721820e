#include "tdse/error.hpp"

namespace tdse {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::MissingSource: return "MissingSource";
    case ErrorCode::KernelTooLong: return "KernelTooLong";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::ZeroDegreeRow: return "ZeroDegreeRow";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::RangeTooNarrow: return "RangeTooNarrow";
    case ErrorCode::EmptyBranch: return "EmptyBranch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyEvidenceList: return "EmptyEvidenceList";
    case ErrorCode::InvalidMass: return "InvalidMass";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::SingleClassLabels: return "SingleClassLabels";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::EmptyCurve: return "EmptyCurve";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace tdse
