#include "urbanfix/dataset.hpp"

#include <charconv>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>

#include "urbanfix/error.hpp"

namespace urbanfix {

using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string percent_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

[[noreturn]] void line_error(ErrorCode code, size_t line,
                             const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

double number_field(const json& obj, const char* key, size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    line_error(ErrorCode::kParse, line,
               std::string("missing or non-numeric \"") + key + "\"");
  }
  return it->get<double>();
}

std::string string_field(const json& obj, const char* key, size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    line_error(ErrorCode::kParse, line,
               std::string("missing or non-string \"") + key + "\"");
  }
  return it->get<std::string>();
}

GeoPoint point_at(double lat, double lon, size_t line) {
  try {
    return GeoPoint(lat, lon);
  } catch (const Error& e) {
    line_error(ErrorCode::kParse, line, e.what());
  }
}

json record_to_json(const ImageRecord& r) {
  json obj = json::object();
  obj["id"] = r.id;
  obj["pano_id"] = r.pano_id;
  obj["lat"] = r.point.lat();
  obj["lon"] = r.point.lon();
  obj["heading_deg"] = r.heading_deg;
  obj["pitch_deg"] = r.pitch_deg;
  obj["fov_deg"] = r.fov_deg;
  obj["image_path"] = r.image_path;
  if (r.descriptor_path) obj["descriptor_path"] = *r.descriptor_path;
  return obj;
}

// nlohmann::json sorts object keys; the manifest keeps the documented order.
std::string dump_ordered(const json& obj, const std::vector<const char*>& keys) {
  std::string out = "{";
  bool first = true;
  for (const char* k : keys) {
    const auto it = obj.find(k);
    if (it == obj.end()) continue;
    if (!first) out += ",";
    first = false;
    out += json(k).dump();
    out += ":";
    out += it->dump();
  }
  out += "}";
  return out;
}

}  // namespace

void Manifest::validate() const {
  if (!(region_radius_m >= 0.0) || !std::isfinite(region_radius_m)) {
    throw Error(ErrorCode::kInvalidArgument,
                "region radius must be a non-negative number");
  }
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate record id: " + r.id);
    }
    if (great_circle_distance(r.point, region_center) >
        region_radius_m * 1.01) {
      throw Error(ErrorCode::kOutOfRegion,
                  "record " + r.id + " lies outside the manifest region");
    }
  }
}

const ImageRecord* Manifest::find(const std::string& id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<ImageRecord> enumerate_headings(const PanoramaSite& site,
                                            double pitch_deg, double fov_deg) {
  if (site.pano_id.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "panorama id must not be empty");
  }
  std::vector<ImageRecord> out;
  out.reserve(kHeadingsPerSite);
  for (int k = 0; k < kHeadingsPerSite; ++k) {
    const int heading = static_cast<int>(k * kHeadingStepDeg);
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "_h%03d", heading);
    ImageRecord r;
    r.id = site.pano_id + suffix;
    r.pano_id = site.pano_id;
    r.point = site.point;
    r.heading_deg = heading;
    r.pitch_deg = pitch_deg;
    r.fov_deg = fov_deg;
    r.image_path = "images/" + r.id + ".png";
    out.push_back(std::move(r));
  }
  return out;
}

std::string build_streetview_url(const ImageRecord& record, ImageSize size,
                                 const std::string& api_key) {
  if (api_key.empty()) {
    throw Error(ErrorCode::kEmptyKey, "street-view API key is empty");
  }
  if (size.width <= 0 || size.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  char location[64];
  std::snprintf(location, sizeof(location), "%.6f,%.6f", record.point.lat(),
                record.point.lon());
  std::string url = "http://maps.googleapis.com/maps/api/streetview?size=";
  url += std::to_string(size.width) + "x" + std::to_string(size.height);
  url += "&location=";
  url += location;
  url += "&fov=" + shortest(record.fov_deg);
  url += "&heading=" + shortest(record.heading_deg);
  url += "&pitch=" + shortest(record.pitch_deg);
  url += "&sensor=true&key=" + percent_encode(api_key);
  return url;
}

std::string manifest_to_jsonl(const Manifest& manifest) {
  std::string out;
  json header = json::object();
  header["region_lat"] = manifest.region_center.lat();
  header["region_lon"] = manifest.region_center.lon();
  header["region_radius_m"] = manifest.region_radius_m;
  out += dump_ordered(header, {"region_lat", "region_lon", "region_radius_m"});
  out += "\n";
  for (const auto& r : manifest.records) {
    out += dump_ordered(record_to_json(r),
                        {"id", "pano_id", "lat", "lon", "heading_deg",
                         "pitch_deg", "fov_deg", "image_path",
                         "descriptor_path"});
    out += "\n";
  }
  return out;
}

Manifest manifest_from_jsonl(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  bool have_header = false;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(ErrorCode::kParse, lineno, e.what());
    }
    if (!obj.is_object()) line_error(ErrorCode::kParse, lineno, "not an object");

    if (!have_header) {
      if (!obj.contains("region_lat")) {
        line_error(ErrorCode::kParse, lineno,
                   "expected header object with region_lat/region_lon/"
                   "region_radius_m");
      }
      m.region_center = point_at(number_field(obj, "region_lat", lineno),
                                 number_field(obj, "region_lon", lineno),
                                 lineno);
      m.region_radius_m = number_field(obj, "region_radius_m", lineno);
      if (!(m.region_radius_m >= 0.0)) {
        line_error(ErrorCode::kParse, lineno, "negative region_radius_m");
      }
      have_header = true;
      continue;
    }

    ImageRecord r;
    r.id = string_field(obj, "id", lineno);
    r.pano_id = string_field(obj, "pano_id", lineno);
    r.point = point_at(number_field(obj, "lat", lineno),
                       number_field(obj, "lon", lineno), lineno);
    r.heading_deg = normalize_heading(number_field(obj, "heading_deg", lineno));
    r.pitch_deg = number_field(obj, "pitch_deg", lineno);
    r.fov_deg = number_field(obj, "fov_deg", lineno);
    if (!(r.fov_deg > 0.0)) line_error(ErrorCode::kParse, lineno, "fov_deg <= 0");
    r.image_path = string_field(obj, "image_path", lineno);
    if (obj.contains("descriptor_path") && !obj["descriptor_path"].is_null()) {
      r.descriptor_path = string_field(obj, "descriptor_path", lineno);
    }
    if (r.id.empty()) line_error(ErrorCode::kParse, lineno, "empty id");
    if (!seen.insert(r.id).second) {
      line_error(ErrorCode::kDuplicateId, lineno, "duplicate id \"" + r.id + "\"");
    }
    if (great_circle_distance(r.point, m.region_center) >
        m.region_radius_m * 1.01) {
      line_error(ErrorCode::kOutOfRegion, lineno,
                 "record \"" + r.id + "\" outside region");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << manifest_to_jsonl(manifest);
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return manifest_from_jsonl(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

FileSiteProvider::FileSiteProvider(std::filesystem::path path)
    : path_(std::move(path)) {}

std::vector<PanoramaSite> FileSiteProvider::sites_near(const GeoPoint&,
                                                       double) {
  std::ifstream in(path_);
  if (!in) {
    throw Error(ErrorCode::kIo, "site list: cannot open " + path_.string());
  }
  std::vector<PanoramaSite> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      PanoramaSite s;
      s.pano_id = string_field(obj, "pano_id", lineno);
      if (s.pano_id.empty()) line_error(ErrorCode::kParse, lineno, "empty pano_id");
      s.point = point_at(number_field(obj, "lat", lineno),
                         number_field(obj, "lon", lineno), lineno);
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kIo, "site list " + path_.string() + ": line " +
                                      std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kIo,
                  "site list " + path_.string() + ": " + e.what());
    }
  }
  return out;
}

LiveSiteProvider::LiveSiteProvider(std::string api_key)
    : api_key_(std::move(api_key)) {
  if (api_key_.empty()) {
    throw Error(ErrorCode::kEmptyKey, "street-view API key is empty");
  }
}

std::vector<PanoramaSite> LiveSiteProvider::sites_near(const GeoPoint&,
                                                       double) {
  throw Error(ErrorCode::kIo,
              "live panorama discovery is not available; supply a site list "
              "file instead");
}

std::vector<PanoramaSite> discover_panoramas(const GeoPoint& center,
                                             double radius_m,
                                             PanoramaProvider& provider) {
  if (!(radius_m >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "radius must be non-negative");
  }
  std::vector<PanoramaSite> out;
  std::set<std::string> seen;
  for (auto& site : provider.sites_near(center, radius_m)) {
    if (!(great_circle_distance(site.point, center) < radius_m)) continue;
    if (!seen.insert(site.pano_id).second) continue;
    out.push_back(std::move(site));
  }
  return out;
}

void download_image(const std::string& url, const std::filesystem::path& out,
                    int min_interval_ms) {
  static std::mutex mu;
  static std::chrono::steady_clock::time_point last{};
  {
    std::lock_guard<std::mutex> lock(mu);
    const auto next = last + std::chrono::milliseconds(min_interval_ms);
    const auto now = std::chrono::steady_clock::now();
    if (now < next) std::this_thread::sleep_for(next - now);
    last = std::chrono::steady_clock::now();
  }

  constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme, 0) != 0) {
    throw Error(ErrorCode::kIo, "only http:// URLs are supported: " + url);
  }
  const size_t slash = url.find('/', kScheme.size());
  const std::string host = url.substr(kScheme.size(), slash - kScheme.size());
  const std::string target = slash == std::string::npos ? "/" : url.substr(slash);

  httplib::Client client(host);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  const auto res = client.Get(target);
  if (!res) {
    throw Error(ErrorCode::kIo, "request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kIo, "HTTP " + std::to_string(res->status) +
                                    " for " + url);
  }
  if (out.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(out.parent_path(), ec);
  }
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  file.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + out.string());
}

}  // namespace urbanfix
