#include "metricdepth/error.hpp"

namespace metricdepth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidShift: return "InvalidShift";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InsufficientBatch: return "InsufficientBatch";
    case ErrorCode::ContractViolation: return "ContractViolation";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Divergence: return "Divergence";
  }
  return "Unknown";
}

}  // namespace metricdepth
