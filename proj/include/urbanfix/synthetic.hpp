#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "urbanfix/dataset.hpp"
#include "urbanfix/gnss.hpp"
#include "urbanfix/image.hpp"

namespace urbanfix {

// A straight street of panoramas centered on `center`, used to exercise the
// whole pipeline without street-view access.
struct SyntheticSpec {
  double street_length_m = 120.0;
  double spacing_m = 12.0;
  double street_bearing_deg = 0.0;
  GeoPoint center{41.8781, -87.6298};
  uint64_t texture_seed = 1;

  int query_count = 100;
  double hdop_min = 1.5;
  double hdop_max = 2.5;
  ErrorModel error_model;
  double heading_jitter_deg = 5.0;
  double noise_sigma = 2.0;
  double brightness_jitter = 10.0;
  // Query warps translate by a whole grid stride (-1, 0 or +1 per axis) plus
  // up to this many pixels.
  double translation_jitter_px = 1.5;
  double rotation_max_deg = 0.5;
  double scale_jitter = 0.01;
  double perspective_max = 2e-5;

  void validate() const;
};

struct GroundTruthQuery {
  std::string query_id;
  std::string image_path;  // relative to the dataset directory
  GpsFix fix;
  double heading_deg = 0.0;
  std::string truth_id;
  // Row-major map from the truth record's pixels to the query's pixels.
  std::array<double, 9> warp{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

struct SyntheticDataset {
  Manifest manifest;
  std::vector<PanoramaSite> sites;
  std::vector<GroundTruthQuery> queries;
  // Rendered pixels keyed by record id and by query id.
  std::map<std::string, Image> record_images;
  std::map<std::string, Image> query_images;
};

int synthetic_panorama_count(const SyntheticSpec& spec);

// Street geometry and manifest only.
Manifest synthetic_manifest(const SyntheticSpec& spec,
                            std::vector<PanoramaSite>* sites = nullptr);

// Deterministic 400x300 gray texture for a record id.
Image render_facade(const std::string& record_id, uint64_t texture_seed);

// Applies `warp` (source -> query pixels) with bilinear sampling; uncovered
// pixels are mid-gray. Then adds a brightness offset and Gaussian noise drawn
// from `noise_seed`.
Image render_query(const Image& source, const std::array<double, 9>& warp,
                   double brightness, double noise_sigma, uint64_t noise_seed);

// Everything in memory: manifest, ground truth, record and query pixels.
SyntheticDataset generate_synthetic_dataset(const SyntheticSpec& spec,
                                            uint64_t seed);

// Writes manifest.jsonl, ground_truth.jsonl, images/*.png, queries/*.png.
void write_synthetic_dataset(const SyntheticDataset& dataset,
                             const std::filesystem::path& dir);

// Ground truth as JSON Lines of {"query_id", "image_path", "lat", "lon",
// "hdop", "fix_quality", "heading_deg", "truth_id", "warp"}.
void save_ground_truth(const std::vector<GroundTruthQuery>& queries,
                       const std::filesystem::path& path);
std::vector<GroundTruthQuery> load_ground_truth(const std::filesystem::path& path);

}  // namespace urbanfix
