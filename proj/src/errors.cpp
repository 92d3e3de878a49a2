#include "scenebench/errors.hpp"

namespace scenebench {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateExtent: return "DegenerateExtent";
    case ErrorCode::InvalidSceneSize: return "InvalidSceneSize";
    case ErrorCode::PlacementFailed: return "PlacementFailed";
    case ErrorCode::SliceFailed: return "SliceFailed";
    case ErrorCode::StackFailed: return "StackFailed";
    case ErrorCode::InvalidCamera: return "InvalidCamera";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::MissingNormals: return "MissingNormals";
    case ErrorCode::EmptyMatching: return "EmptyMatching";
    case ErrorCode::InvalidMatching: return "InvalidMatching";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ManifestError: return "ManifestError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::JobError: return "JobError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace scenebench
