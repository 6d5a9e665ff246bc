#include "urbanfix/gnss.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "urbanfix/error.hpp"

namespace urbanfix {

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedField, "malformed GGA field: " + what);
}

std::vector<std::string_view> split_fields(std::string_view body) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = body.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(body.substr(start));
      break;
    }
    fields.push_back(body.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

bool all_digits(std::string_view text) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// ddmm.mmmm (lat, 2 degree digits) or dddmm.mmmm (lon, 3 degree digits).
double parse_angle(std::string_view text, size_t degree_digits,
                   std::string_view hemisphere, char positive, char negative,
                   double limit, const char* name) {
  const size_t dot = text.find('.');
  const std::string_view integral =
      dot == std::string_view::npos ? text : text.substr(0, dot);
  if (integral.size() != degree_digits + 2 || !all_digits(integral)) {
    malformed(name);
  }
  if (dot != std::string_view::npos && !all_digits(text.substr(dot + 1))) {
    malformed(name);
  }
  double degrees = 0.0;
  double minutes = 0.0;
  if (!parse_double(integral.substr(0, degree_digits), degrees) ||
      !parse_double(text.substr(degree_digits), minutes) || minutes >= 60.0) {
    malformed(name);
  }
  double value = degrees + minutes / 60.0;
  if (value > limit) malformed(name);
  if (hemisphere.size() != 1) malformed(std::string(name) + " hemisphere");
  if (hemisphere[0] == negative) {
    value = -value;
  } else if (hemisphere[0] != positive) {
    malformed(std::string(name) + " hemisphere");
  }
  return value;
}

}  // namespace

void ErrorModel::validate() const {
  if (!(uere_m > 0.0) || !std::isfinite(uere_m)) {
    throw Error(ErrorCode::kInvalidArgument, "UERE must be positive");
  }
  if (!(confidence_factor > 0.0) || !std::isfinite(confidence_factor)) {
    throw Error(ErrorCode::kInvalidArgument,
                "confidence factor must be positive");
  }
}

double estimated_position_error(const GpsFix& fix, const ErrorModel& model) {
  if (!fix.usable()) {
    throw Error(ErrorCode::kInvalidFix, "GPS fix quality is 0 (no fix)");
  }
  if (!(fix.hdop >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "HDOP must be non-negative");
  }
  model.validate();
  return model.confidence_factor * fix.hdop * model.uere_m;
}

unsigned nmea_checksum(std::string_view body) {
  unsigned sum = 0;
  for (char c : body) sum ^= static_cast<unsigned char>(c);
  return sum;
}

GpsFix parse_gga(std::string_view sentence) {
  while (!sentence.empty() &&
         (sentence.back() == '\r' || sentence.back() == '\n')) {
    sentence.remove_suffix(1);
  }
  if (sentence.empty() || sentence.front() != '$') {
    throw Error(ErrorCode::kMalformedField,
                "NMEA sentence must start with '$'");
  }
  const size_t star = sentence.rfind('*');
  if (star == std::string_view::npos || star + 3 != sentence.size()) {
    throw Error(ErrorCode::kMalformedField,
                "NMEA sentence must end with '*' and two hex digits");
  }
  const std::string_view body = sentence.substr(1, star - 1);
  const auto fields = split_fields(body);
  const std::string_view address = fields[0];
  if (address.size() != 5 || address.substr(2) != "GGA") {
    throw Error(ErrorCode::kNotGga,
                "not a GGA sentence: " + std::string(address));
  }

  const int hi = hex_value(sentence[star + 1]);
  const int lo = hex_value(sentence[star + 2]);
  if (hi < 0 || lo < 0) {
    throw Error(ErrorCode::kMalformedField, "checksum is not hexadecimal");
  }
  const unsigned expected = static_cast<unsigned>(hi * 16 + lo);
  const unsigned actual = nmea_checksum(body);
  if (expected != actual) {
    char buf[64];
    std::snprintf(buf, sizeof(buf),
                  "checksum mismatch: sentence *%02X, computed *%02X",
                  expected, actual);
    throw Error(ErrorCode::kChecksumMismatch, buf);
  }

  if (fields.size() < 15) malformed("expected at least 15 fields");

  GpsFix fix;
  if (!fields[1].empty()) {
    const std::string_view t = fields[1];
    if (t.size() < 6 || !all_digits(t.substr(0, 6))) malformed("time");
    fix.timestamp = std::string(t.substr(0, 2)) + ":" +
                    std::string(t.substr(2, 2)) + ":" +
                    std::string(t.substr(4, 2));
  }
  const double lat = parse_angle(fields[2], 2, fields[3], 'N', 'S', 90.0,
                                 "latitude");
  const double lon = parse_angle(fields[4], 3, fields[5], 'E', 'W', 180.0,
                                 "longitude");
  fix.point = GeoPoint(lat, lon);

  if (!all_digits(fields[6]) || fields[6].size() > 2) malformed("fix quality");
  fix.fix_quality = std::stoi(std::string(fields[6]));

  double hdop = 0.0;
  if (!parse_double(fields[8], hdop) || hdop < 0.0) malformed("HDOP");
  fix.hdop = hdop;
  return fix;
}

}  // namespace urbanfix
