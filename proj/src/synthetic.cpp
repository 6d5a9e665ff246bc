#include "urbanfix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "urbanfix/error.hpp"
#include "urbanfix/features.hpp"

namespace urbanfix {

using nlohmann::json;

namespace {

uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t hash_string(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 stream with portable uniform and normal draws, so generated
// datasets do not depend on the standard library's distributions.
class Random {
 public:
  explicit Random(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
  }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

double lattice_value(uint64_t seed, int octave, int64_t i, int64_t j) {
  uint64_t h = mix64(seed ^ (static_cast<uint64_t>(octave) * 0x632be59bd9b4e019ULL));
  h = mix64(h ^ static_cast<uint64_t>(i) * 0x8cb92ba72f3d8dd7ULL);
  h = mix64(h ^ static_cast<uint64_t>(j) * 0x9e3779b97f4a7c15ULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Smoothly interpolated lattice noise over one octave, lattice precomputed.
class ValueNoise {
 public:
  ValueNoise(uint64_t seed, int octave, double cell, int width, int height)
      : cell_(cell),
        cols_(static_cast<int>(width / cell) + 2),
        rows_(static_cast<int>(height / cell) + 2),
        lattice_(static_cast<size_t>(cols_) * rows_) {
    for (int j = 0; j < rows_; ++j) {
      for (int i = 0; i < cols_; ++i) {
        lattice_[static_cast<size_t>(j) * cols_ + i] = lattice_value(seed, octave, i, j);
      }
    }
  }

  double operator()(double x, double y) const {
    const double fx = x / cell_;
    const double fy = y / cell_;
    const int i = static_cast<int>(fx);
    const int j = static_cast<int>(fy);
    const double tx = smooth(fx - i);
    const double ty = smooth(fy - j);
    const double a = at(i, j);
    const double b = at(i + 1, j);
    const double c = at(i, j + 1);
    const double d = at(i + 1, j + 1);
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
  }

 private:
  double at(int i, int j) const { return lattice_[static_cast<size_t>(j) * cols_ + i]; }

  double cell_;
  int cols_;
  int rows_;
  std::vector<double> lattice_;
};

std::string pano_id_for(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%04d", index);
  return buf;
}

std::string query_id_for(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "q%04d", index);
  return buf;
}

std::array<double, 9> random_warp(const SyntheticSpec& spec, Random& rng) {
  const double cx = 0.5 * (kNormalizedWidth - 1);
  const double cy = 0.5 * (kNormalizedHeight - 1);
  const double tx = kGridStride * rng.integer(-1, 1) +
                    rng.uniform(-spec.translation_jitter_px, spec.translation_jitter_px);
  const double ty = kGridStride * rng.integer(-1, 1) +
                    rng.uniform(-spec.translation_jitter_px, spec.translation_jitter_px);
  const double theta = deg_to_rad(rng.uniform(-spec.rotation_max_deg, spec.rotation_max_deg));
  const double s = 1.0 + rng.uniform(-spec.scale_jitter, spec.scale_jitter);
  const double p1 = rng.uniform(-spec.perspective_max, spec.perspective_max);
  const double p2 = rng.uniform(-spec.perspective_max, spec.perspective_max);

  Eigen::Matrix3d to_center;
  to_center << 1, 0, -cx, 0, 1, -cy, 0, 0, 1;
  Eigen::Matrix3d similarity;
  similarity << s * std::cos(theta), -s * std::sin(theta), 0,
                s * std::sin(theta), s * std::cos(theta), 0, 0, 0, 1;
  Eigen::Matrix3d perspective;
  perspective << 1, 0, 0, 0, 1, 0, p1, p2, 1;
  Eigen::Matrix3d back;
  back << 1, 0, cx + tx, 0, 1, cy + ty, 0, 0, 1;
  Eigen::Matrix3d h = back * perspective * similarity * to_center;
  h /= h(2, 2);
  std::array<double, 9> out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = h(r, c);
  }
  return out;
}

// destination_point() can land a few ulps short of the requested distance;
// step outward until the measured distance is no less than `distance_m`, so
// a panorama nominally at the filter radius stays outside it.
GeoPoint place_at_least(const GeoPoint& origin, double bearing_deg, double distance_m) {
  double d = distance_m;
  GeoPoint p = destination_point(origin, bearing_deg, d);
  for (int i = 0; i < 16; ++i) {
    const double measured = great_circle_distance(origin, p);
    if (measured >= distance_m) break;
    d += 2.0 * (distance_m - measured) + distance_m * 1e-15;
    p = destination_point(origin, bearing_deg, d);
  }
  return p;
}

json query_to_json(const GroundTruthQuery& q) {
  json obj = json::object();
  obj["query_id"] = q.query_id;
  obj["image_path"] = q.image_path;
  obj["lat"] = q.fix.point.lat();
  obj["lon"] = q.fix.point.lon();
  obj["hdop"] = q.fix.hdop;
  obj["fix_quality"] = q.fix.fix_quality;
  obj["heading_deg"] = q.heading_deg;
  obj["truth_id"] = q.truth_id;
  obj["warp"] = q.warp;
  return obj;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (!(street_length_m >= 0.0) || !(spacing_m > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "street length must be >= 0 and spacing > 0");
  }
  if (query_count < 0 || !(hdop_min >= 0.0) || !(hdop_max >= hdop_min)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid query parameters");
  }
  error_model.validate();
}

int synthetic_panorama_count(const SyntheticSpec& spec) {
  spec.validate();
  return static_cast<int>(std::floor(spec.street_length_m / spec.spacing_m + 1e-9)) + 1;
}

Manifest synthetic_manifest(const SyntheticSpec& spec,
                            std::vector<PanoramaSite>* sites) {
  const int n = synthetic_panorama_count(spec);
  const double half = 0.5 * (n - 1) * spec.spacing_m;
  Manifest m;
  m.region_center = spec.center;
  m.region_radius_m = half + spec.spacing_m;
  for (int k = 0; k < n; ++k) {
    const double offset = k * spec.spacing_m - half;
    PanoramaSite site;
    site.pano_id = pano_id_for(k);
    if (offset == 0.0) {
      site.point = spec.center;
    } else {
      const double bearing = offset > 0 ? spec.street_bearing_deg
                                        : spec.street_bearing_deg + 180.0;
      site.point = place_at_least(spec.center, bearing, std::fabs(offset));
    }
    for (auto& r : enumerate_headings(site)) m.records.push_back(std::move(r));
    if (sites) sites->push_back(site);
  }
  return m;
}

Image render_facade(const std::string& record_id, uint64_t texture_seed) {
  const uint64_t seed = mix64(texture_seed ^ hash_string(record_id));
  Random rng(seed);
  const int w = kNormalizedWidth;
  const int h = kNormalizedHeight;

  static constexpr double kCells[] = {48.0, 24.0, 12.0, 6.0};
  static constexpr double kAmps[] = {0.35, 0.30, 0.20, 0.15};
  std::vector<ValueNoise> octaves;
  for (int o = 0; o < 4; ++o) octaves.emplace_back(seed, o, kCells[o], w, h);
  std::vector<double> field(static_cast<size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (int o = 0; o < 4; ++o) v += kAmps[o] * octaves[o](x, y);
      field[static_cast<size_t>(y) * w + x] = v;
    }
  }
  // Window-like rectangles on top of the noise.
  const int rects = rng.integer(10, 20);
  for (int k = 0; k < rects; ++k) {
    const int rw = rng.integer(10, 60);
    const int rh = rng.integer(10, 60);
    const int x0 = rng.integer(0, w - rw);
    const int y0 = rng.integer(0, h - rh);
    const double delta = rng.uniform(-0.3, 0.3);
    for (int y = y0; y < y0 + rh; ++y) {
      for (int x = x0; x < x0 + rw; ++x) field[static_cast<size_t>(y) * w + x] += delta;
    }
  }
  Image img;
  img.width = w;
  img.height = h;
  img.channels = 1;
  img.data.resize(field.size());
  for (size_t i = 0; i < field.size(); ++i) {
    const double v = 20.0 + 215.0 * std::clamp(field[i], 0.0, 1.0);
    img.data[i] = static_cast<uint8_t>(std::lround(v));
  }
  return img;
}

Image render_query(const Image& source, const std::array<double, 9>& warp,
                   double brightness, double noise_sigma, uint64_t noise_seed) {
  if (source.channels != 1 || source.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "query source must be gray");
  }
  Eigen::Matrix3d h;
  h << warp[0], warp[1], warp[2], warp[3], warp[4], warp[5], warp[6], warp[7], warp[8];
  const Eigen::Matrix3d inv = h.inverse();
  Random rng(noise_seed);
  Image out;
  out.width = source.width;
  out.height = source.height;
  out.channels = 1;
  out.data.resize(static_cast<size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Eigen::Vector3d p = inv * Eigen::Vector3d(x, y, 1.0);
      const double sx = p.x() / p.z();
      const double sy = p.y() / p.z();
      double v = 128.0;
      if (sx >= 0.0 && sy >= 0.0 && sx <= source.width - 1 && sy <= source.height - 1) {
        const int x0 = std::min(static_cast<int>(sx), source.width - 2);
        const int y0 = std::min(static_cast<int>(sy), source.height - 2);
        const double fx = sx - x0;
        const double fy = sy - y0;
        const double a = source.at(x0, y0);
        const double b = source.at(x0 + 1, y0);
        const double c = source.at(x0, y0 + 1);
        const double d = source.at(x0 + 1, y0 + 1);
        v = (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
      }
      v += brightness + noise_sigma * rng.normal();
      out.data[static_cast<size_t>(y) * out.width + x] =
          static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

SyntheticDataset generate_synthetic_dataset(const SyntheticSpec& spec,
                                            uint64_t seed) {
  SyntheticDataset ds;
  ds.manifest = synthetic_manifest(spec, &ds.sites);
  for (const auto& r : ds.manifest.records) {
    ds.record_images.emplace(r.id, render_facade(r.id, spec.texture_seed));
  }

  Random rng(mix64(seed));
  const size_t n = ds.manifest.records.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<size_t>(rng.next() % i)]);
  }

  for (int q = 0; q < spec.query_count; ++q) {
    const ImageRecord& truth = ds.manifest.records[order[static_cast<size_t>(q) % n]];
    GroundTruthQuery gt;
    gt.query_id = query_id_for(q);
    gt.image_path = "queries/" + gt.query_id + ".png";
    gt.truth_id = truth.id;
    gt.fix.hdop = spec.hdop_min + (spec.hdop_max - spec.hdop_min) * rng.uniform();
    gt.fix.fix_quality = 1;
    const double epe = estimated_position_error(gt.fix, spec.error_model);
    const double offset = epe * std::sqrt(rng.uniform());
    gt.fix.point = destination_point(truth.point, rng.uniform(0.0, 360.0), offset);
    gt.heading_deg = normalize_heading(
        truth.heading_deg + rng.uniform(-spec.heading_jitter_deg, spec.heading_jitter_deg));
    gt.warp = random_warp(spec, rng);
    const double brightness = rng.uniform(-spec.brightness_jitter, spec.brightness_jitter);
    const uint64_t noise_seed = rng.next();
    ds.query_images.emplace(
        gt.query_id, render_query(ds.record_images.at(truth.id), gt.warp,
                                  brightness, spec.noise_sigma, noise_seed));
    ds.queries.push_back(std::move(gt));
  }
  return ds;
}

void write_synthetic_dataset(const SyntheticDataset& dataset,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "queries");
  for (const auto& r : dataset.manifest.records) {
    write_png(dataset.record_images.at(r.id), dir / r.image_path);
  }
  for (const auto& q : dataset.queries) {
    write_png(dataset.query_images.at(q.query_id), dir / q.image_path);
  }
  save_manifest(dataset.manifest, dir / "manifest.jsonl");
  save_ground_truth(dataset.queries, dir / "ground_truth.jsonl");
}

void save_ground_truth(const std::vector<GroundTruthQuery>& queries,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& q : queries) out << query_to_json(q).dump() << "\n";
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<GroundTruthQuery> load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<GroundTruthQuery> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      GroundTruthQuery q;
      q.query_id = obj.at("query_id").get<std::string>();
      q.image_path = obj.at("image_path").get<std::string>();
      q.fix.point = GeoPoint(obj.at("lat").get<double>(), obj.at("lon").get<double>());
      q.fix.hdop = obj.at("hdop").get<double>();
      q.fix.fix_quality = obj.value("fix_quality", 1);
      q.heading_deg = obj.at("heading_deg").get<double>();
      q.truth_id = obj.value("truth_id", std::string());
      if (obj.contains("warp")) q.warp = obj["warp"].get<std::array<double, 9>>();
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, path.string() + ": line " +
                                         std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, path.string() + ": line " +
                                         std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace urbanfix
