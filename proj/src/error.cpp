#include "urbanfix/error.hpp"

namespace urbanfix {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidFix: return "invalid-fix";
    case ErrorCode::kChecksumMismatch: return "checksum-mismatch";
    case ErrorCode::kNotGga: return "not-gga";
    case ErrorCode::kMalformedField: return "malformed-field";
    case ErrorCode::kEmptyKey: return "empty-key";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kOutOfRegion: return "out-of-region";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUndecodableImage: return "undecodable-image";
    case ErrorCode::kWrongImageSize: return "wrong-image-size";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kTruncatedFile: return "truncated-file";
    case ErrorCode::kInsufficientPoints: return "insufficient-points";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kPointAtInfinity: return "point-at-infinity";
    case ErrorCode::kMissingDescriptors: return "missing-descriptors";
    case ErrorCode::kMissingTruth: return "missing-truth";
  }
  return "unknown";
}

}  // namespace urbanfix
