#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace urbanfix {

// Every failure the library reports carries one of these codes so callers can
// branch on the kind of error without parsing messages.
enum class ErrorCode {
  kInvalidArgument,
  kInvalidFix,
  kChecksumMismatch,
  kNotGga,
  kMalformedField,
  kEmptyKey,
  kParse,
  kDuplicateId,
  kOutOfRegion,
  kIo,
  kUndecodableImage,
  kWrongImageSize,
  kBadMagic,
  kVersionMismatch,
  kTruncatedFile,
  kInsufficientPoints,
  kDegenerateConfiguration,
  kPointAtInfinity,
  kMissingDescriptors,
  kMissingTruth,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace urbanfix
