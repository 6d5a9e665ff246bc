#include "urbanfix/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "urbanfix/error.hpp"

namespace urbanfix {

namespace {

bool within(const GeoPoint& a, const GeoPoint& b, double radius_m) {
  return great_circle_distance(a, b) < radius_m;
}

CandidateSet finish(const Manifest& manifest, const std::vector<size_t>& near,
                    const GpsFix& fix, double epe_m, double query_heading_deg,
                    const RetrievalConfig& config) {
  CandidateSet set;
  set.query_fix = fix;
  set.epe_m = epe_m;
  for (size_t i : near) {
    const ImageRecord& r = manifest.records[i];
    const double dh = heading_difference(r.heading_deg, query_heading_deg);
    if (!(dh < config.view_window_k)) continue;
    set.items.push_back({&r, i, great_circle_distance(r.point, fix.point), dh});
  }
  std::sort(set.items.begin(), set.items.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
              return a.record->id < b.record->id;
            });
  if (config.max_candidates > 0 && set.items.size() > config.max_candidates) {
    set.items.resize(config.max_candidates);
  }
  return set;
}

void check_query(double epe_m, const RetrievalConfig& config) {
  config.validate();
  if (!(epe_m >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "EPE must be non-negative");
  }
}

}  // namespace

void RetrievalConfig::validate() const {
  if (!(th > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "th must be positive");
  }
  if (!(view_window_k > 0.0 && view_window_k <= 180.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "view window must be in (0, 180] degrees");
  }
}

GridIndex::GridIndex(const Manifest& manifest, double cell_m) {
  if (!(cell_m > 0.0) || !std::isfinite(cell_m)) {
    throw Error(ErrorCode::kInvalidArgument, "cell size must be positive");
  }
  const double r = EarthModel::kDefaultRadiusM;
  cell_lat_deg_ = rad_to_deg(cell_m / r);
  const double cos_lat = std::cos(deg_to_rad(manifest.region_center.lat()));
  // Near the poles the longitude cell degenerates to one cell per 360 deg.
  cell_lon_deg_ = cos_lat > 1e-9 ? std::min(360.0, rad_to_deg(cell_m / (r * cos_lat)))
                                 : 360.0;
  lon_cells_ = static_cast<int64_t>(std::ceil(360.0 / cell_lon_deg_));
  // Make the longitude cells tile the circle exactly so wrap-around is a
  // modulo on the cell index.
  cell_lon_deg_ = 360.0 / static_cast<double>(lon_cells_);
  record_count_ = manifest.records.size();
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    buckets_[cell_of(manifest.records[i].point)].push_back(i);
  }
}

GridIndex::CellKey GridIndex::cell_of(const GeoPoint& p) const {
  const auto lat_cell = static_cast<int64_t>(std::floor((p.lat() + 90.0) / cell_lat_deg_));
  auto lon_cell = static_cast<int64_t>(std::floor((p.lon() + 180.0) / cell_lon_deg_));
  lon_cell = std::clamp<int64_t>(lon_cell, 0, lon_cells_ - 1);
  return {lat_cell, lon_cell};
}

GridIndex build_grid_index(const Manifest& manifest, double cell_m) {
  return GridIndex(manifest, cell_m);
}

std::vector<size_t> radius_scan(const Manifest& manifest, const GeoPoint& center,
                                double radius_m) {
  std::vector<size_t> out;
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    if (within(manifest.records[i].point, center, radius_m)) out.push_back(i);
  }
  return out;
}

std::vector<size_t> radius_query(const GridIndex& index, const Manifest& manifest,
                                 const GeoPoint& center, double radius_m) {
  if (index.record_count_ != manifest.records.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "grid index was built for a different manifest");
  }
  std::vector<size_t> out;
  if (!(radius_m > 0.0) || index.buckets_.empty()) return out;

  const double r = EarthModel::kDefaultRadiusM;
  // Angular radius with a small safety margin; the exact predicate below
  // removes anything the box over-covers.
  const double ang = radius_m / r * (1.0 + 1e-9) + 1e-12;
  const double lat = deg_to_rad(center.lat());
  const double lat_lo = rad_to_deg(lat - ang);
  const double lat_hi = rad_to_deg(lat + ang);

  bool full_lon = true;
  double dlon = 0.0;
  if (ang < kPi / 2 && lat_lo > -90.0 && lat_hi < 90.0) {
    const double s = std::sin(ang) / std::cos(lat);
    if (s < 1.0) {
      dlon = rad_to_deg(std::asin(s)) * (1.0 + 1e-9) + 1e-12;
      full_lon = dlon >= 180.0;
    }
  }

  const auto lat_cell = [&](double deg) {
    return static_cast<int64_t>(std::floor((std::clamp(deg, -90.0, 90.0) + 90.0) /
                                           index.cell_lat_deg_));
  };
  // One extra cell on each side absorbs rounding in the cell arithmetic.
  const int64_t lat_first = lat_cell(lat_lo) - 1;
  const int64_t lat_last = lat_cell(lat_hi) + 1;

  std::vector<int64_t> lon_cells;
  if (full_lon) {
    for (int64_t c = 0; c < index.lon_cells_; ++c) lon_cells.push_back(c);
  } else {
    const auto first = static_cast<int64_t>(
        std::floor((center.lon() - dlon + 180.0) / index.cell_lon_deg_)) - 1;
    const auto last = static_cast<int64_t>(
        std::floor((center.lon() + dlon + 180.0) / index.cell_lon_deg_)) + 1;
    if (last - first + 1 >= index.lon_cells_) {
      for (int64_t c = 0; c < index.lon_cells_; ++c) lon_cells.push_back(c);
    } else {
      for (int64_t c = first; c <= last; ++c) {
        lon_cells.push_back(((c % index.lon_cells_) + index.lon_cells_) % index.lon_cells_);
      }
    }
  }

  const auto total = static_cast<size_t>(lat_last - lat_first + 1) * lon_cells.size();
  if (total > index.buckets_.size()) {
    // Cheaper to walk the occupied buckets than the empty box.
    for (const auto& [key, ids] : index.buckets_) {
      if (key.first < lat_first || key.first > lat_last) continue;
      if (!full_lon &&
          std::find(lon_cells.begin(), lon_cells.end(), key.second) == lon_cells.end()) {
        continue;
      }
      for (size_t i : ids) {
        if (within(manifest.records[i].point, center, radius_m)) out.push_back(i);
      }
    }
  } else {
    for (int64_t la = lat_first; la <= lat_last; ++la) {
      for (int64_t lo : lon_cells) {
        const auto it = index.buckets_.find({la, lo});
        if (it == index.buckets_.end()) continue;
        for (size_t i : it->second) {
          if (within(manifest.records[i].point, center, radius_m)) out.push_back(i);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CandidateSet filter_candidates(const Manifest& manifest, const GpsFix& fix,
                               double epe_m, double query_heading_deg,
                               const RetrievalConfig& config) {
  check_query(epe_m, config);
  const auto near = radius_scan(manifest, fix.point, config.th * epe_m);
  return finish(manifest, near, fix, epe_m, query_heading_deg, config);
}

CandidateSet filter_candidates(const Manifest& manifest, const GridIndex& index,
                               const GpsFix& fix, double epe_m,
                               double query_heading_deg,
                               const RetrievalConfig& config) {
  check_query(epe_m, config);
  const auto near = radius_query(index, manifest, fix.point, config.th * epe_m);
  return finish(manifest, near, fix, epe_m, query_heading_deg, config);
}

}  // namespace urbanfix
