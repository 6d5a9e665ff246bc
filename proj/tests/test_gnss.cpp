#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "urbanfix/error.hpp"
#include "urbanfix/gnss.hpp"

namespace urbanfix {
namespace {

constexpr const char* kSample =
    "$GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,*47";

// Writes a GGA sentence with a correct checksum; test-side serializer.
std::string format_gga(double lat, double lon, int quality, double hdop) {
  const double alat = std::fabs(lat), alon = std::fabs(lon);
  const int dlat = static_cast<int>(alat), dlon = static_cast<int>(alon);
  char body[160];
  std::snprintf(body, sizeof(body),
                "GPGGA,101010.00,%02d%09.6f,%c,%03d%09.6f,%c,%d,07,%.2f,12.0,M,-33.0,M,,",
                dlat, (alat - dlat) * 60.0, lat < 0 ? 'S' : 'N', dlon,
                (alon - dlon) * 60.0, lon < 0 ? 'W' : 'E', quality, hdop);
  unsigned sum = 0;
  for (const char* c = body; *c; ++c) sum ^= static_cast<unsigned char>(*c);
  char out[200];
  std::snprintf(out, sizeof(out), "$%s*%02X", body, sum);
  return out;
}

TEST(Epe, Examples) {
  GpsFix fix;
  fix.fix_quality = 1;
  fix.hdop = 1.0;
  EXPECT_DOUBLE_EQ(estimated_position_error(fix), 20.4);
  fix.hdop = 0.0;
  EXPECT_EQ(estimated_position_error(fix), 0.0);
  fix.hdop = 2.5;
  EXPECT_DOUBLE_EQ(estimated_position_error(fix), 51.0);
}

TEST(Epe, EqualsTwoHdopUereExactly) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> hdop(0.0, 20.0), uere(0.1, 50.0);
  for (int i = 0; i < 1000; ++i) {
    GpsFix fix;
    fix.fix_quality = 1;
    fix.hdop = hdop(rng);
    ErrorModel m;
    m.uere_m = uere(rng);
    EXPECT_EQ(estimated_position_error(fix, m), 2.0 * fix.hdop * m.uere_m);
  }
}

TEST(Epe, RejectsUnusableInputs) {
  GpsFix fix;
  fix.hdop = 1.0;
  fix.fix_quality = 0;
  EXPECT_ERROR_CODE(estimated_position_error(fix), ErrorCode::kInvalidFix);
  fix.fix_quality = 1;
  fix.hdop = -0.1;
  EXPECT_ERROR_CODE(estimated_position_error(fix), ErrorCode::kInvalidArgument);
  fix.hdop = 1.0;
  ErrorModel m;
  m.uere_m = 0.0;
  EXPECT_ERROR_CODE(estimated_position_error(fix, m), ErrorCode::kInvalidArgument);
  m.uere_m = 10.2;
  m.confidence_factor = -1.0;
  EXPECT_ERROR_CODE(estimated_position_error(fix, m), ErrorCode::kInvalidArgument);
}

TEST(Nmea, ChecksumMatchesHandComputedXor) {
  EXPECT_EQ(nmea_checksum("GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,"),
            0x47u);
  EXPECT_EQ(nmea_checksum(""), 0u);
}

TEST(Nmea, ParsesSampleSentence) {
  const GpsFix fix = parse_gga(kSample);
  EXPECT_NEAR(fix.point.lat(), 48.1173, 1e-12);
  EXPECT_NEAR(fix.point.lon(), 11.516666666666667, 1e-12);
  EXPECT_EQ(fix.hdop, 0.9);
  EXPECT_EQ(fix.fix_quality, 1);
  ASSERT_TRUE(fix.timestamp.has_value());
  EXPECT_EQ(*fix.timestamp, "12:35:19");
}

TEST(Nmea, AcceptsTrailingCrLfAndLowercaseHex) {
  EXPECT_NO_THROW(parse_gga(std::string(kSample) + "\r\n"));
  const std::string s = format_gga(-33.5, -70.25, 2, 1.1);
  std::string lower = s;
  for (size_t i = lower.size() - 2; i < lower.size(); ++i) {
    lower[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(lower[i])));
  }
  EXPECT_NO_THROW(parse_gga(lower));
}

TEST(Nmea, ChecksumMismatch) {
  std::string s = kSample;
  s.replace(s.size() - 2, 2, "48");
  EXPECT_ERROR_CODE(parse_gga(s), ErrorCode::kChecksumMismatch);
  s = kSample;
  s[10] = '6';
  EXPECT_ERROR_CODE(parse_gga(s), ErrorCode::kChecksumMismatch);
}

TEST(Nmea, OtherSentenceTypesAreNotGga) {
  EXPECT_ERROR_CODE(
      parse_gga("$GPRMC,123519,A,4807.038,N,01131.000,E,022.4,084.4,230394,003.1,W*6A"),
      ErrorCode::kNotGga);
  EXPECT_ERROR_CODE(parse_gga("$GPGSA,A,3,04,05,,09,12,,,24,,,,,2.5,1.3,2.1*39"),
                    ErrorCode::kNotGga);
}

TEST(Nmea, GlonassAndMultiConstellationTalkersParse) {
  std::string s = format_gga(10.0, 20.0, 1, 1.0);
  s[2] = 'N';  // $GNGGA
  unsigned sum = nmea_checksum(std::string_view(s).substr(1, s.size() - 4));
  char hex[3];
  std::snprintf(hex, sizeof(hex), "%02X", sum);
  s.replace(s.size() - 2, 2, hex);
  EXPECT_NEAR(parse_gga(s).point.lat(), 10.0, 1e-6);
}

TEST(Nmea, MalformedFields) {
  EXPECT_ERROR_CODE(parse_gga("GPGGA,123519*00"), ErrorCode::kMalformedField);
  EXPECT_ERROR_CODE(parse_gga("$GPGGA,123519"), ErrorCode::kMalformedField);
  EXPECT_ERROR_CODE(parse_gga("$GPGGA,123519*ZZ"), ErrorCode::kMalformedField);
  // Valid checksum, too few fields.
  const std::string body = "GPGGA,123519,4807.038,N";
  char s[80];
  std::snprintf(s, sizeof(s), "$%s*%02X", body.c_str(), nmea_checksum(body));
  EXPECT_ERROR_CODE(parse_gga(s), ErrorCode::kMalformedField);

  const auto with_body = [](const std::string& b) {
    char out[200];
    std::snprintf(out, sizeof(out), "$%s*%02X", b.c_str(), nmea_checksum(b));
    return std::string(out);
  };
  EXPECT_ERROR_CODE(parse_gga(with_body("GPGGA,123519,4807.038,X,01131.000,E,1,08,0.9,545.4,M,46.9,M,,")),
                    ErrorCode::kMalformedField);
  EXPECT_ERROR_CODE(parse_gga(with_body("GPGGA,123519,9107.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,")),
                    ErrorCode::kMalformedField);
  EXPECT_ERROR_CODE(parse_gga(with_body("GPGGA,123519,4867.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,")),
                    ErrorCode::kMalformedField);
  EXPECT_ERROR_CODE(parse_gga(with_body("GPGGA,123519,4807.038,N,01131.000,E,1,08,,545.4,M,46.9,M,,")),
                    ErrorCode::kMalformedField);
  EXPECT_ERROR_CODE(parse_gga(with_body("GPGGA,123519,4807.038,N,01131.000,E,,08,0.9,545.4,M,46.9,M,,")),
                    ErrorCode::kMalformedField);
  EXPECT_ERROR_CODE(parse_gga(with_body("GPGGA,123519,4807.038,N,1131.000,E,1,08,0.9,545.4,M,46.9,M,,")),
                    ErrorCode::kMalformedField);
}

TEST(Nmea, NoFixSentenceParsesButIsUnusable) {
  const GpsFix fix = parse_gga(format_gga(1.0, 2.0, 0, 99.9));
  EXPECT_FALSE(fix.usable());
  EXPECT_ERROR_CODE(estimated_position_error(fix), ErrorCode::kInvalidFix);
}

TEST(Nmea, SerializerRoundTrip) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> lat(-89.9, 89.9), lon(-179.9, 179.9), hdop(0.5, 9.0);
  for (int i = 0; i < 2000; ++i) {
    const double la = lat(rng), lo = lon(rng), h = std::round(hdop(rng) * 100) / 100;
    const GpsFix fix = parse_gga(format_gga(la, lo, 1, h));
    EXPECT_NEAR(fix.point.lat(), la, 1e-7);
    EXPECT_NEAR(fix.point.lon(), lo, 1e-7);
    EXPECT_NEAR(fix.hdop, h, 1e-12);
    EXPECT_EQ(fix.fix_quality, 1);
  }
}

TEST(Nmea, FuzzedInputOnlyRaisesTypedErrors) {
  std::mt19937_64 rng(23);
  const std::string alphabet = "$GPA,*.0123456789NSEWM\r\n-+ xZ";
  std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1), len(0, 90);
  size_t parsed = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      s = kSample;
      const size_t flips = 1 + i % 4;
      for (size_t k = 0; k < flips; ++k) s[pick(rng) % s.size()] = alphabet[pick(rng)];
    } else {
      for (size_t n = len(rng); n > 0; --n) s.push_back(alphabet[pick(rng)]);
    }
    try {
      (void)parse_gga(s);
      ++parsed;
    } catch (const Error&) {
    }
  }
  EXPECT_LT(parsed, 20000u);
}

}  // namespace
}  // namespace urbanfix
