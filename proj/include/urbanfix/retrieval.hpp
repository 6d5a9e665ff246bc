#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "urbanfix/dataset.hpp"
#include "urbanfix/gnss.hpp"

namespace urbanfix {

struct RetrievalConfig {
  double th = 1.2;              // search radius = th * EPE
  double view_window_k = 15.0;  // heading window, degrees
  size_t max_candidates = 100;  // 0 disables truncation

  void validate() const;
};

struct Candidate {
  const ImageRecord* record = nullptr;
  size_t record_index = 0;
  double distance_m = 0.0;
  double heading_delta_deg = 0.0;
};

// Records surviving both filters, nearest first (ties by id).
struct CandidateSet {
  std::vector<Candidate> items;
  GpsFix query_fix;
  double epe_m = 0.0;
};

// Buckets record indices by (lat, lon) cell. Cell size is given in meters
// and converted to degrees at the region-center latitude.
class GridIndex {
 public:
  using CellKey = std::pair<int64_t, int64_t>;

  GridIndex() = default;
  GridIndex(const Manifest& manifest, double cell_m);

  double cell_lat_deg() const { return cell_lat_deg_; }
  double cell_lon_deg() const { return cell_lon_deg_; }
  size_t record_count() const { return record_count_; }
  const std::map<CellKey, std::vector<size_t>>& buckets() const { return buckets_; }

  CellKey cell_of(const GeoPoint& p) const;

 private:
  friend std::vector<size_t> radius_query(const GridIndex&, const Manifest&,
                                          const GeoPoint&, double);
  double cell_lat_deg_ = 1.0;
  double cell_lon_deg_ = 1.0;
  int64_t lon_cells_ = 360;  // cells spanning the full circle of longitude
  size_t record_count_ = 0;
  std::map<CellKey, std::vector<size_t>> buckets_;
};

GridIndex build_grid_index(const Manifest& manifest, double cell_m);

// Indices (ascending) of records strictly closer than radius_m to `center`.
// `manifest` must be the one the index was built from.
std::vector<size_t> radius_query(const GridIndex& index, const Manifest& manifest,
                                 const GeoPoint& center, double radius_m);

// Reference implementation: exhaustive scan with the same predicate.
std::vector<size_t> radius_scan(const Manifest& manifest, const GeoPoint& center,
                                double radius_m);

// Radius and heading-window pruning. The grid index overload must give the
// same result as the linear-scan overload.
CandidateSet filter_candidates(const Manifest& manifest, const GpsFix& fix,
                               double epe_m, double query_heading_deg,
                               const RetrievalConfig& config);
CandidateSet filter_candidates(const Manifest& manifest, const GridIndex& index,
                               const GpsFix& fix, double epe_m,
                               double query_heading_deg,
                               const RetrievalConfig& config);

}  // namespace urbanfix
