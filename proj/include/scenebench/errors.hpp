#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scenebench {

enum class ErrorCode {
  EmptyInput,
  InvalidGeometry,
  InsufficientPoints,
  DegenerateExtent,
  InvalidSceneSize,
  PlacementFailed,
  SliceFailed,
  StackFailed,
  InvalidCamera,
  SpaceMismatch,
  NoOverlap,
  MissingNormals,
  EmptyMatching,
  InvalidMatching,
  ShapeError,
  DomainError,
  ManifestError,
  VersionError,
  JobError,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scenebench
