#include "grasshopper/error.hpp"

namespace grasshopper {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::NonUnitPoint: return "NonUnitPoint";
    case ErrorCode::DuplicateSite: return "DuplicateSite";
    case ErrorCode::NoAntipodalStructure: return "NoAntipodalStructure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::JumpUnresolvable: return "JumpUnresolvable";
    case ErrorCode::OddSiteCount: return "OddSiteCount";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InvalidMove: return "InvalidMove";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SymmetryIncompatible: return "SymmetryIncompatible";
    case ErrorCode::CutoffMismatch: return "CutoffMismatch";
    case ErrorCode::DegenerateBoundary: return "DegenerateBoundary";
    case ErrorCode::NoStripeStructure: return "NoStripeStructure";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::TangencyUnresolved: return "TangencyUnresolved";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::BadFlag: return "BadFlag";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace grasshopper
