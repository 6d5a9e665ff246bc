#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "urbanfix/geodesy.hpp"

namespace urbanfix {

struct GpsFix {
  GeoPoint point;
  double hdop = 0.0;
  // NMEA fix quality; 0 means no fix and the reading must not be used.
  int fix_quality = 0;
  // UTC hh:mm:ss as reported by the receiver, if any.
  std::optional<std::string> timestamp;

  bool usable() const { return fix_quality >= 1; }
};

// Horizontal error model: EPE = confidence_factor * HDOP * UERE.
struct ErrorModel {
  double uere_m = 10.2;
  double confidence_factor = 2.0;

  void validate() const;
};

// Radius (meters) of the ~98% confidence circle around the fix. Throws
// ErrorCode::kInvalidFix when the fix quality is 0.
double estimated_position_error(const GpsFix& fix,
                                const ErrorModel& model = ErrorModel{});

// XOR of every byte between '$' and '*'.
unsigned nmea_checksum(std::string_view body);

// Parses one GGA sentence (any talker id, e.g. $GPGGA or $GNGGA). Errors are
// distinguishable through Error::code(): kChecksumMismatch, kNotGga,
// kMalformedField.
GpsFix parse_gga(std::string_view sentence);

}  // namespace urbanfix
