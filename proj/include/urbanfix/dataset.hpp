#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "urbanfix/geodesy.hpp"

namespace urbanfix {

inline constexpr double kDefaultPitchDeg = 10.0;
inline constexpr double kDefaultFovDeg = 60.0;
inline constexpr int kHeadingsPerSite = 12;
inline constexpr double kHeadingStepDeg = 30.0;

// Environment variable holding the street-view API key.
inline constexpr const char* kStreetViewKeyEnv = "URBANFIX_SV_KEY";

// One geotagged, heading-stamped reference image.
struct ImageRecord {
  std::string id;
  std::string pano_id;
  GeoPoint point;
  double heading_deg = 0.0;
  double pitch_deg = kDefaultPitchDeg;
  double fov_deg = kDefaultFovDeg;
  std::string image_path;
  std::optional<std::string> descriptor_path;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Manifest {
  std::vector<ImageRecord> records;
  GeoPoint region_center;
  double region_radius_m = 0.0;

  // Throws kDuplicateId / kOutOfRegion / kInvalidArgument on the first
  // violated invariant.
  void validate() const;

  const ImageRecord* find(const std::string& id) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct PanoramaSite {
  std::string pano_id;
  GeoPoint point;

  friend bool operator==(const PanoramaSite&, const PanoramaSite&) = default;
};

// The twelve 30-degree views of one panorama, headings 0..330 ascending,
// ids "<pano_id>_h<heading:03>", image paths "images/<id>.png".
std::vector<ImageRecord> enumerate_headings(const PanoramaSite& site,
                                            double pitch_deg = kDefaultPitchDeg,
                                            double fov_deg = kDefaultFovDeg);

struct ImageSize {
  int width = 0;
  int height = 0;
};

std::string build_streetview_url(const ImageRecord& record, ImageSize size,
                                 const std::string& api_key);

// JSON Lines: a header object {"region_lat","region_lon","region_radius_m"}
// followed by one record object per line.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

std::string manifest_to_jsonl(const Manifest& manifest);
Manifest manifest_from_jsonl(const std::string& text);

class PanoramaProvider {
 public:
  virtual ~PanoramaProvider() = default;
  // Candidate sites around `center`; may return sites outside the radius or
  // duplicates, discover_panoramas() filters them.
  virtual std::vector<PanoramaSite> sites_near(const GeoPoint& center,
                                               double radius_m) = 0;
};

// Reads JSON Lines of {"pano_id", "lat", "lon"}.
class FileSiteProvider : public PanoramaProvider {
 public:
  explicit FileSiteProvider(std::filesystem::path path);
  std::vector<PanoramaSite> sites_near(const GeoPoint& center,
                                       double radius_m) override;

 private:
  std::filesystem::path path_;
};

// Placeholder for live discovery against the street-view service. Panorama
// enumeration over HTTP needs the service's metadata endpoint and a key; this
// build does not ship it and every call reports an I/O error.
class LiveSiteProvider : public PanoramaProvider {
 public:
  explicit LiveSiteProvider(std::string api_key);
  std::vector<PanoramaSite> sites_near(const GeoPoint& center,
                                       double radius_m) override;

 private:
  std::string api_key_;
};

// Sites strictly within `radius_m` of `center`, first occurrence of each
// pano_id kept, provider order preserved.
std::vector<PanoramaSite> discover_panoramas(const GeoPoint& center,
                                             double radius_m,
                                             PanoramaProvider& provider);

// Fetches `url` over plain HTTP into `out`, spacing requests at least
// `min_interval_ms` apart process-wide. Throws kIo on failure.
void download_image(const std::string& url, const std::filesystem::path& out,
                    int min_interval_ms = 200);

}  // namespace urbanfix
